#include "strata/chunk.hpp"

#include <stdexcept>

#include "strata/memory_model.hpp"

namespace strata {

bool ValueRangeConstraint::matches(const Value& v) const {
  if (null_only) return is_null(v);
  if (is_null(v)) return false;
  if (low && value_less(v, *low)) return false;
  if (high && !value_less(v, *high)) return false;
  return true;
}

Chunk::Chunk(const TableSchema& schema, uint32_t capacity, bool use_for_inserts)
    : capacity_(capacity), use_for_inserts_(use_for_inserts), mvcc_(capacity) {
  segments_.reserve(schema.column_count());
  for (const auto& column : schema.columns()) {
    segments_.push_back(
        std::make_shared<ValueSegment>(column.type, capacity, column.nullable));
  }
  stats_.resize(schema.column_count());
}

std::shared_ptr<const Segment> Chunk::segment(ColumnId column) const {
  std::lock_guard<std::mutex> guard(segment_mutex_);
  return segments_.at(column);
}

uint32_t Chunk::append_rows(
    uint32_t wanted, const std::function<void(ChunkOffset slot, uint32_t row)>& fill) {
  std::lock_guard<std::mutex> guard(segment_mutex_);
  if (!mutable_.load(std::memory_order_relaxed)) return 0;
  const uint32_t start = row_count_.load(std::memory_order_relaxed);
  const uint32_t count = std::min(wanted, capacity_ - start);
  for (uint32_t row = 0; row < count; ++row) fill(start + row, row);
  row_count_.store(start + count, std::memory_order_release);
  return count;
}

void Chunk::write_value(ColumnId column, ChunkOffset offset, const Value& value) {
  auto* segment = dynamic_cast<ValueSegment*>(segments_.at(column).get());
  if (!segment) throw std::logic_error("write into an encoded segment");
  segment->write(offset, value);
}

void Chunk::finalize() {
  std::lock_guard<std::mutex> guard(segment_mutex_);
  if (!mutable_.load(std::memory_order_relaxed)) return;
  const uint32_t rows = row_count_.load(std::memory_order_relaxed);
  for (ColumnId column = 0; column < segments_.size(); ++column) {
    const auto& segment = *segments_[column];
    MinMaxStats stats;
    bool any_value = false;
    for (ChunkOffset row = 0; row < rows; ++row) {
      if (segment.is_null(row)) {
        stats.has_null = true;
        continue;
      }
      Value v = segment.value_at(row);
      if (!any_value) {
        stats.min = v;
        stats.max = std::move(v);
        any_value = true;
        continue;
      }
      if (value_less(v, stats.min)) {
        stats.min = std::move(v);
      } else if (value_less(stats.max, v)) {
        stats.max = std::move(v);
      }
    }
    if (any_value) stats_[column] = std::move(stats);
  }
  mutable_.store(false, std::memory_order_release);
}

void Chunk::encode() {
  if (is_mutable()) throw std::logic_error("encode requires a finalized chunk");
  const uint32_t rows = size();
  for (ColumnId column = 0; column < segments_.size(); ++column) {
    std::shared_ptr<Segment> current;
    {
      std::lock_guard<std::mutex> guard(segment_mutex_);
      current = segments_[column];
    }
    const auto* plain = dynamic_cast<const ValueSegment*>(current.get());
    if (!plain) continue;
    auto encoded = std::make_shared<DictionarySegment>(*plain, rows);
    std::lock_guard<std::mutex> guard(segment_mutex_);
    segments_[column] = std::move(encoded);
  }
}

bool Chunk::is_encoded() const {
  std::lock_guard<std::mutex> guard(segment_mutex_);
  for (const auto& segment : segments_) {
    if (!segment->is_encoded()) return false;
  }
  return !segments_.empty();
}

std::optional<MinMaxStats> Chunk::stats(ColumnId column) const {
  if (is_mutable()) return std::nullopt;
  return stats_.at(column);
}

std::optional<ColumnId> Chunk::sort_column() const {
  const int32_t column = sort_column_.load(std::memory_order_acquire);
  if (column < 0) return std::nullopt;
  return static_cast<ColumnId>(column);
}

void Chunk::set_sort_column(ColumnId column) {
  sort_column_.store(static_cast<int32_t>(column), std::memory_order_release);
}

void Chunk::set_value_range_constraints(std::vector<ValueRangeConstraint> constraints) {
  constraints_ = std::move(constraints);
}

uint64_t Chunk::estimate_bytes() const {
  std::lock_guard<std::mutex> guard(segment_mutex_);
  uint64_t bytes = memory_model::kChunkOverheadBytes;
  for (const auto& segment : segments_) bytes += segment->estimate_bytes();
  return bytes;
}

}  // namespace strata
