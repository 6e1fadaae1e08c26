#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "strata/segment.hpp"
#include "strata/types.hpp"

namespace strata {

/// Row-level MVCC metadata. A row is visible to snapshot s iff
/// begin_cid <= s < end_cid (unset end = open-ended). tid is the row lock:
/// nonzero while some transaction has the row under modification; it also
/// stays set on invalidated rows, which count as under modification forever.
struct MvccRowMeta {
  std::atomic<CommitId> begin_cid{kUnsetCid};
  std::atomic<CommitId> end_cid{kUnsetCid};
  std::atomic<TransactionId> tid{0};
};

/// Chunk-level MVCC state.
struct ChunkMvcc {
  explicit ChunkMvcc(uint32_t capacity)
      : row_meta(std::make_unique<MvccRowMeta[]>(capacity)) {}

  std::unique_ptr<MvccRowMeta[]> row_meta;
  /// Monotone count of invalidated rows (includes tombstoned aborted inserts).
  std::atomic<uint64_t> invalid_row_count{0};
  /// Once set, readers with snapshot >= this cid skip the chunk entirely.
  std::atomic<CommitId> cleanup_commit_id{kUnsetCid};
};

/// Per-segment min/max filter over non-null values; computed at finalize.
struct MinMaxStats {
  Value min;
  Value max;
  bool has_null = false;
};

/// Value-range constraint a clustered chunk guarantees for one column:
/// low <= v < high (either side may be unbounded), or null-only.
struct ValueRangeConstraint {
  ColumnId column = kInvalidColumnId;
  std::optional<Value> low;
  std::optional<Value> high;
  bool null_only = false;

  bool matches(const Value& v) const;
};

/// Fixed-capacity horizontal slice of a table. Mutable chunks accept row
/// appends into pre-allocated value segments; finalized chunks are immutable,
/// carry min/max stats, and may be dictionary-encoded.
class Chunk {
 public:
  Chunk(const TableSchema& schema, uint32_t capacity, bool use_for_inserts);

  uint32_t capacity() const { return capacity_; }
  size_t column_count() const { return segments_.size(); }

  /// Published row count; rows below it are fully written and safe to read.
  uint32_t size() const { return row_count_.load(std::memory_order_acquire); }

  bool is_mutable() const { return mutable_.load(std::memory_order_acquire); }
  bool use_for_inserts() const { return use_for_inserts_; }

  ChunkMvcc& mvcc() { return mvcc_; }
  const ChunkMvcc& mvcc() const { return mvcc_; }
  MvccRowMeta& row_meta(ChunkOffset offset) { return mvcc_.row_meta[offset]; }
  const MvccRowMeta& row_meta(ChunkOffset offset) const { return mvcc_.row_meta[offset]; }

  /// Current segment of a column. Safe against a concurrent encode swap.
  std::shared_ptr<const Segment> segment(ColumnId column) const;

  /// Appends up to `wanted` rows. For each reserved slot, `fill(slot, row)`
  /// (row = 0..count-1) must write every column via write_value and
  /// initialize the slot's row metadata; the rows are published to readers
  /// afterwards. Appends are serialized on an internal mutex. Returns the
  /// number of rows actually appended (0 when the chunk is full or
  /// finalized).
  uint32_t append_rows(uint32_t wanted,
                       const std::function<void(ChunkOffset slot, uint32_t row)>& fill);

  /// Writes one cell of a reserved, not-yet-published slot. Only valid from
  /// inside an append_rows fill callback.
  void write_value(ColumnId column, ChunkOffset offset, const Value& value);

  /// Finalizes the chunk: no further appends, stats computed per segment.
  /// Idempotent.
  void finalize();

  /// Replaces every value segment by an exact-size dictionary segment.
  /// Requires a finalized chunk. Idempotent; safe with concurrent readers.
  void encode();
  bool is_encoded() const;

  /// Stats for one column; nullopt before finalize or for all-null segments.
  std::optional<MinMaxStats> stats(ColumnId column) const;

  std::optional<ColumnId> sort_column() const;
  void set_sort_column(ColumnId column);

  const std::vector<ValueRangeConstraint>& value_range_constraints() const {
    return constraints_;
  }
  void set_value_range_constraints(std::vector<ValueRangeConstraint> constraints);

  uint64_t estimate_bytes() const;

 private:
  uint32_t capacity_;
  bool use_for_inserts_;
  std::atomic<bool> mutable_{true};
  std::atomic<uint32_t> row_count_{0};

  mutable std::mutex segment_mutex_;  // guards appends, finalize, and segment swaps
  std::vector<std::shared_ptr<Segment>> segments_;
  std::vector<std::optional<MinMaxStats>> stats_;

  std::atomic<int32_t> sort_column_{-1};
  std::vector<ValueRangeConstraint> constraints_;
  ChunkMvcc mvcc_;
};

}  // namespace strata
