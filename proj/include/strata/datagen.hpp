#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strata/mvcc.hpp"
#include "strata/table.hpp"
#include "strata/types.hpp"

namespace strata {

enum class DistributionKind : uint8_t { UniformInt, Zipf, DateRange, Categorical, Derived };

/// One generated column. Which fields apply depends on `kind`:
///  - UniformInt: integers drawn uniformly from [min_value, max_value]
///  - Zipf: integers from [min_value, max_value], rank r = v - min + 1 drawn
///    with probability proportional to 1/r^skew (skew 0 degenerates to
///    uniform)
///  - DateRange: dates drawn uniformly from [start_date, end_date]
///  - Categorical: one of `categories` distinct labels, drawn uniformly
///  - Derived: value of `base_column` plus a uniform offset in
///    [1, offset_window] (days for date bases, plain integers otherwise)
struct ColumnGenSpec {
  std::string name;
  DistributionKind kind = DistributionKind::UniformInt;
  int64_t min_value = 0;
  int64_t max_value = 0;
  double skew = 0.0;
  std::string start_date;
  std::string end_date;
  uint32_t categories = 0;
  std::string base_column;
  int64_t offset_window = 0;
};

struct DataGenSpec {
  std::string table;
  uint64_t row_count = 0;
  uint32_t chunk_capacity = kDefaultChunkCapacity;
  std::optional<std::string> sort_by;  // emit rows globally sorted by this column
  std::vector<ColumnGenSpec> columns;
};

/// Parses the JSON generator-spec format (see README). Derived columns must
/// reference an earlier column. Throws std::invalid_argument on any problem.
DataGenSpec parse_datagen_spec(const std::string& json_text);
DataGenSpec load_datagen_spec(const std::string& path);

/// Schema the spec's columns produce (all columns non-nullable).
TableSchema datagen_schema(const DataGenSpec& spec);

/// All rows in output order, fully determined by (spec, seed).
std::vector<std::vector<Value>> generate_rows(const DataGenSpec& spec, uint64_t seed);

/// Generates the rows, inserts them as one committed transaction, finalizes
/// full chunks, and — when sort_by is set — marks every chunk sorted by that
/// column (the rows are emitted globally sorted).
std::shared_ptr<Table> generate_table(const DataGenSpec& spec, TransactionManager& tm,
                                      uint64_t seed);

/// Days since 1970-01-01 for a "YYYY-MM-DD" string, and the inverse. Throws
/// std::invalid_argument on malformed or non-existent dates.
int64_t date_to_days(const std::string& date);
std::string days_to_date(int64_t days);

}  // namespace strata
