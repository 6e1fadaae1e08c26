#pragma once

#include <optional>
#include <string>

#include "strata/chunk.hpp"
#include "strata/types.hpp"

namespace strata {

// Comparison operators supported by table scans.  LIKE patterns are restricted
// to the two shapes that matter for pruning behaviour: a prefix match
// ("abc%") and an infix match ("%abc%").
enum class Comparator {
  Equals,
  LessThan,
  LessThanEquals,
  GreaterThan,
  GreaterThanEquals,
  Between,        // inclusive on both ends
  LikePrefix,     // string starts with `value`
  LikeInfix,      // string contains `value`
};

const char* comparator_name(Comparator comparator);
std::optional<Comparator> comparator_from_name(const std::string& name);

// A single-column scan predicate.  `value` is the primary operand; `second_value`
// is only used by Between (upper bound, inclusive).
struct PredicateSpec {
  ColumnId column{0};
  Comparator comparator{Comparator::Equals};
  Value value{};
  Value second_value{};

  // True when the comparator can be evaluated against min/max statistics.
  // Infix LIKE inspects the middle of a string, so no zone map can exclude it.
  bool pruning_usable() const { return comparator != Comparator::LikeInfix; }

  // True when the comparator can binary-search a sorted segment. LIKE
  // patterns always take the linear path.
  bool sortedness_usable() const {
    return comparator != Comparator::LikeInfix && comparator != Comparator::LikePrefix;
  }

  // Evaluates the predicate against a single value.  NULL never matches.
  bool matches(const Value& v) const;
};

// Returns true when `stats` proves that no row of the segment can satisfy
// `predicate`, i.e. the enclosing chunk may be skipped entirely.  The check is
// conservative: `false` only means "cannot rule the chunk out".
bool can_prune(const MinMaxStats& stats, const PredicateSpec& predicate);

// Smallest string that is strictly greater than every string with the given
// prefix, or nullopt when no such bound exists (prefix is all 0xFF bytes).
// Used to turn a prefix LIKE into a half-open range for pruning.
std::optional<std::string> prefix_upper_bound(const std::string& prefix);

}  // namespace strata
