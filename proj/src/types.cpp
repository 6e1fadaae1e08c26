#include "strata/types.hpp"

#include <cstdio>
#include <cstdlib>
#include <unordered_set>

namespace strata {

const char* data_type_name(DataType type) {
  switch (type) {
    case DataType::Int64:
      return "int64";
    case DataType::Float64:
      return "float64";
    case DataType::String:
      return "string";
    case DataType::Date:
      return "date";
  }
  return "unknown";
}

std::optional<DataType> data_type_from_name(const std::string& name) {
  if (name == "int64") return DataType::Int64;
  if (name == "float64") return DataType::Float64;
  if (name == "string") return DataType::String;
  if (name == "date") return DataType::Date;
  return std::nullopt;
}

int value_compare(const Value& a, const Value& b) {
  const bool a_null = is_null(a);
  const bool b_null = is_null(b);
  if (a_null || b_null) {
    if (a_null && b_null) return 0;
    return a_null ? -1 : 1;
  }
  if (a.index() != b.index()) {
    throw std::invalid_argument("value_compare: mismatched value types");
  }
  if (const auto* ai = std::get_if<int64_t>(&a)) {
    const auto bi = std::get<int64_t>(b);
    return (*ai < bi) ? -1 : (*ai > bi ? 1 : 0);
  }
  if (const auto* ad = std::get_if<double>(&a)) {
    const auto bd = std::get<double>(b);
    return (*ad < bd) ? -1 : (*ad > bd ? 1 : 0);
  }
  const auto& as = std::get<std::string>(a);
  const auto& bs = std::get<std::string>(b);
  const int c = as.compare(bs);
  return (c < 0) ? -1 : (c > 0 ? 1 : 0);
}

std::string value_to_string(const Value& v) {
  if (is_null(v)) return "";
  if (const auto* i = std::get_if<int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    // %.17g round-trips every finite double.
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", *d);
    return buffer;
  }
  return std::get<std::string>(v);
}

Value value_from_string(DataType type, const std::string& text) {
  switch (type) {
    case DataType::Int64: {
      char* end = nullptr;
      const long long parsed = std::strtoll(text.c_str(), &end, 10);
      if (end == text.c_str() || *end != '\0') {
        throw std::invalid_argument("not an int64: '" + text + "'");
      }
      return Value{static_cast<int64_t>(parsed)};
    }
    case DataType::Float64: {
      char* end = nullptr;
      const double parsed = std::strtod(text.c_str(), &end);
      if (end == text.c_str() || *end != '\0') {
        throw std::invalid_argument("not a float64: '" + text + "'");
      }
      return Value{parsed};
    }
    case DataType::String:
    case DataType::Date:
      return Value{text};
  }
  throw std::invalid_argument("unknown data type");
}

TableSchema::TableSchema(std::vector<ColumnDefinition> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> seen;
  for (const auto& column : columns_) {
    if (!seen.insert(column.name).second) {
      throw std::invalid_argument("duplicate column name: " + column.name);
    }
  }
}

ColumnId TableSchema::column_id(const std::string& name) const {
  const auto found = find_column(name);
  if (!found) throw std::out_of_range("unknown column: " + name);
  return *found;
}

std::optional<ColumnId> TableSchema::find_column(const std::string& name) const {
  for (ColumnId id = 0; id < columns_.size(); ++id) {
    if (columns_[id].name == name) return id;
  }
  return std::nullopt;
}

size_t ValueHash::operator()(const Value& v) const {
  switch (v.index()) {
    case 0:
      return 0x9e3779b97f4a7c15ull;  // NULL sentinel
    case 1:
      return std::hash<int64_t>{}(std::get<int64_t>(v));
    case 2:
      return std::hash<double>{}(std::get<double>(v));
    default:
      return std::hash<std::string>{}(std::get<std::string>(v));
  }
}

}  // namespace strata
