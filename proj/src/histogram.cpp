#include "strata/histogram.hpp"

#include <algorithm>
#include <stdexcept>

namespace strata {

Histogram build_histogram_from_values(std::vector<Value> values, ColumnId column,
                                      uint32_t max_bins, uint64_t null_count) {
  if (values.empty()) {
    throw std::invalid_argument("build_histogram: column has no non-null rows");
  }
  std::sort(values.begin(), values.end(), value_less);

  // Collapse into (distinct value, row count) runs.
  std::vector<std::pair<Value, uint64_t>> runs;
  for (auto& v : values) {
    if (!runs.empty() && value_equals(runs.back().first, v)) {
      ++runs.back().second;
    } else {
      runs.emplace_back(std::move(v), 1);
    }
  }

  const uint64_t distinct = runs.size();
  uint64_t bin_count = std::min<uint64_t>(max_bins, distinct);
  if (distinct >= 5) bin_count = std::max<uint64_t>(bin_count, 5);

  Histogram histogram;
  histogram.column = column;
  histogram.null_count = null_count;
  histogram.total_rows = values.size();
  histogram.bins.reserve(bin_count);

  // Near-equal split of distinct values: the first (distinct % bin_count)
  // bins take one extra distinct value.
  const uint64_t base = distinct / bin_count;
  const uint64_t extra = distinct % bin_count;
  size_t next_run = 0;
  for (uint64_t bin_index = 0; bin_index < bin_count; ++bin_index) {
    const uint64_t take = base + (bin_index < extra ? 1 : 0);
    HistogramBin bin;
    bin.lower = runs[next_run].first;
    for (uint64_t i = 0; i < take; ++i, ++next_run) {
      bin.row_count += runs[next_run].second;
    }
    bin.upper = runs[next_run - 1].first;
    bin.distinct_count = take;
    histogram.bins.push_back(std::move(bin));
  }
  return histogram;
}

Histogram build_histogram(const Table& table, ColumnId column, uint32_t max_bins) {
  std::vector<Value> values;
  uint64_t null_count = 0;
  for (const auto& chunk : table.chunk_snapshot()) {
    if (!chunk) continue;
    const auto segment = chunk->segment(column);
    const uint32_t rows = chunk->size();
    for (ChunkOffset row = 0; row < rows; ++row) {
      // Live rows only: rows already invalidated would distort boundaries.
      if (chunk->row_meta(row).end_cid.load(std::memory_order_acquire) != kUnsetCid) {
        continue;
      }
      if (segment->is_null(row)) {
        ++null_count;
        continue;
      }
      values.push_back(segment->value_at(row));
    }
  }
  return build_histogram_from_values(std::move(values), column, max_bins, null_count);
}

}  // namespace strata
