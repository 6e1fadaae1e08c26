#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace strata {

using ChunkId = uint32_t;
using ChunkOffset = uint32_t;
using ColumnId = uint32_t;
using CommitId = uint64_t;
using TransactionId = uint64_t;

inline constexpr CommitId kUnsetCid = std::numeric_limits<CommitId>::max();
inline constexpr ChunkId kInvalidChunkId = std::numeric_limits<ChunkId>::max();
inline constexpr ColumnId kInvalidColumnId = std::numeric_limits<ColumnId>::max();

/// Default number of rows per chunk (2^16 - 1).
inline constexpr uint32_t kDefaultChunkCapacity = 65535;

enum class DataType : uint8_t { Int64, Float64, String, Date };

/// A single cell. std::monostate encodes NULL. Dates are kept as 10-character
/// "YYYY-MM-DD" strings, which order correctly under plain string comparison.
using Value = std::variant<std::monostate, int64_t, double, std::string>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

/// Human-readable type name, also used by the sidecar metadata format.
const char* data_type_name(DataType type);
std::optional<DataType> data_type_from_name(const std::string& name);

/// True when the physical representation is std::string.
inline bool is_string_type(DataType type) {
  return type == DataType::String || type == DataType::Date;
}

/// Three-way comparison of two non-null values of the same column type.
/// NULL sorts before every non-null value; two NULLs compare equal.
int value_compare(const Value& a, const Value& b);

inline bool value_less(const Value& a, const Value& b) { return value_compare(a, b) < 0; }
inline bool value_equals(const Value& a, const Value& b) { return value_compare(a, b) == 0; }

/// Hash/equality functors so values can key unordered containers (join hash
/// tables, oracle checks). NULL hashes to a fixed sentinel.
struct ValueHash {
  size_t operator()(const Value& v) const;
};
struct ValueEq {
  bool operator()(const Value& a, const Value& b) const { return value_equals(a, b); }
};

/// Formats a value for CSV/debug output. NULL must be handled by the caller
/// (the CSV layer writes it as an empty field). Doubles round-trip exactly.
std::string value_to_string(const Value& v);

/// Parses a non-null value of the given column type from its string form.
/// Throws std::invalid_argument on malformed input.
Value value_from_string(DataType type, const std::string& text);

struct ColumnDefinition {
  std::string name;
  DataType type = DataType::Int64;
  bool nullable = false;
};

class TableSchema {
 public:
  TableSchema() = default;
  explicit TableSchema(std::vector<ColumnDefinition> columns);

  const std::vector<ColumnDefinition>& columns() const { return columns_; }
  size_t column_count() const { return columns_.size(); }
  const ColumnDefinition& column(ColumnId id) const { return columns_.at(id); }

  /// Index of a column by name; throws std::out_of_range for unknown names.
  ColumnId column_id(const std::string& name) const;
  std::optional<ColumnId> find_column(const std::string& name) const;

 private:
  std::vector<ColumnDefinition> columns_;
};

}  // namespace strata
