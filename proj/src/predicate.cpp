#include "strata/predicate.hpp"

#include <array>
#include <stdexcept>

namespace strata {

namespace {

struct ComparatorName {
  Comparator comparator;
  const char* name;
};

constexpr std::array<ComparatorName, 8> kComparatorNames{{
    {Comparator::Equals, "="},
    {Comparator::LessThan, "<"},
    {Comparator::LessThanEquals, "<="},
    {Comparator::GreaterThan, ">"},
    {Comparator::GreaterThanEquals, ">="},
    {Comparator::Between, "between"},
    {Comparator::LikePrefix, "like-prefix"},
    {Comparator::LikeInfix, "like-infix"},
}};

}  // namespace

const char* comparator_name(Comparator comparator) {
  for (const auto& entry : kComparatorNames) {
    if (entry.comparator == comparator) return entry.name;
  }
  throw std::logic_error("unknown comparator");
}

std::optional<Comparator> comparator_from_name(const std::string& name) {
  for (const auto& entry : kComparatorNames) {
    if (name == entry.name) return entry.comparator;
  }
  // Friendly aliases used by query text.
  if (name == "==") return Comparator::Equals;
  return std::nullopt;
}

bool PredicateSpec::matches(const Value& v) const {
  if (is_null(v)) return false;
  switch (comparator) {
    case Comparator::Equals:
      return value_compare(v, value) == 0;
    case Comparator::LessThan:
      return value_compare(v, value) < 0;
    case Comparator::LessThanEquals:
      return value_compare(v, value) <= 0;
    case Comparator::GreaterThan:
      return value_compare(v, value) > 0;
    case Comparator::GreaterThanEquals:
      return value_compare(v, value) >= 0;
    case Comparator::Between:
      return value_compare(v, value) >= 0 && value_compare(v, second_value) <= 0;
    case Comparator::LikePrefix: {
      const auto& s = std::get<std::string>(v);
      const auto& prefix = std::get<std::string>(value);
      return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
    }
    case Comparator::LikeInfix: {
      const auto& s = std::get<std::string>(v);
      const auto& infix = std::get<std::string>(value);
      return s.find(infix) != std::string::npos;
    }
  }
  throw std::logic_error("unknown comparator");
}

std::optional<std::string> prefix_upper_bound(const std::string& prefix) {
  std::string bound = prefix;
  while (!bound.empty()) {
    auto& last = reinterpret_cast<unsigned char&>(bound.back());
    if (last < 0xFF) {
      ++last;
      return bound;
    }
    bound.pop_back();
  }
  return std::nullopt;
}

bool can_prune(const MinMaxStats& stats, const PredicateSpec& predicate) {
  // All-null segments have no min/max; no non-null value exists, and NULL
  // never matches, so every predicate prunes them.
  if (is_null(stats.min) || is_null(stats.max)) return true;

  switch (predicate.comparator) {
    case Comparator::Equals:
      return value_compare(predicate.value, stats.min) < 0 ||
             value_compare(predicate.value, stats.max) > 0;
    case Comparator::LessThan:
      return value_compare(stats.min, predicate.value) >= 0;
    case Comparator::LessThanEquals:
      return value_compare(stats.min, predicate.value) > 0;
    case Comparator::GreaterThan:
      return value_compare(stats.max, predicate.value) <= 0;
    case Comparator::GreaterThanEquals:
      return value_compare(stats.max, predicate.value) < 0;
    case Comparator::Between:
      return value_compare(predicate.second_value, stats.min) < 0 ||
             value_compare(predicate.value, stats.max) > 0;
    case Comparator::LikePrefix: {
      const auto& prefix = std::get<std::string>(predicate.value);
      // Matching strings lie in [prefix, upper_bound(prefix)).
      if (value_compare(stats.max, Value{prefix}) < 0) return true;
      const auto upper = prefix_upper_bound(prefix);
      return upper.has_value() && value_compare(stats.min, Value{*upper}) >= 0;
    }
    case Comparator::LikeInfix:
      // The matched substring may appear anywhere; min/max say nothing.
      return false;
  }
  throw std::logic_error("unknown comparator");
}

}  // namespace strata
