#pragma once

#include <cstdint>
#include <vector>

#include "strata/table.hpp"
#include "strata/types.hpp"

namespace strata {

/// One histogram bin: a closed interval over observed distinct values.
/// Gaps between a bin's upper bound and the next bin's lower bound belong to
/// the following bin for assignment purposes.
struct HistogramBin {
  Value lower;  // inclusive
  Value upper;  // inclusive
  uint64_t distinct_count = 0;
  uint64_t row_count = 0;
};

/// Equal-distinct-count histogram: distinct values are split into bins whose
/// distinct counts differ by at most one; row_count counts every (non-null)
/// row falling into the bin.
struct Histogram {
  ColumnId column = kInvalidColumnId;
  std::vector<HistogramBin> bins;
  uint64_t total_rows = 0;  // non-null rows covered by the bins
  uint64_t null_count = 0;  // null rows observed while building

  uint64_t distinct_count() const {
    uint64_t total = 0;
    for (const auto& bin : bins) total += bin.distinct_count;
    return total;
  }
};

inline constexpr uint32_t kDefaultHistogramBins = 100;

/// Builds a histogram over a column's live rows (rows not yet invalidated;
/// nulls excluded from bins but counted). Bin count = min(max_bins,
/// distinct), raised to 5 whenever at least 5 distinct values exist.
/// Throws std::invalid_argument when the column holds no non-null live rows.
Histogram build_histogram(const Table& table, ColumnId column,
                          uint32_t max_bins = kDefaultHistogramBins);

/// Same construction from a plain value list (used by tests as an oracle
/// entry point and by the boundary chooser on materialized snapshots).
Histogram build_histogram_from_values(std::vector<Value> values, ColumnId column,
                                      uint32_t max_bins, uint64_t null_count);

}  // namespace strata
