#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "strata/chunk.hpp"
#include "strata/types.hpp"

namespace strata {

/// Columnar table: an ordered list of fixed-capacity chunks. One mutable
/// chunk is designated as the insert chunk that external inserts target.
/// Chunk slots are stable; physical deletion nulls a slot out.
class Table {
 public:
  Table(TableSchema schema, uint32_t chunk_capacity = kDefaultChunkCapacity);

  const TableSchema& schema() const { return schema_; }
  uint32_t chunk_capacity() const { return chunk_capacity_; }

  /// Number of chunk slots ever created (including deleted ones).
  ChunkId chunk_count() const;

  /// Chunk by slot id; nullptr after physical deletion.
  std::shared_ptr<Chunk> chunk(ChunkId id) const;

  /// Stable snapshot of all chunk slots for iteration.
  std::vector<std::shared_ptr<Chunk>> chunk_snapshot() const;

  ChunkId insert_chunk_id() const { return insert_chunk_id_.load(std::memory_order_acquire); }
  std::shared_ptr<Chunk> insert_chunk() const { return chunk(insert_chunk_id()); }

  /// The exclusive lock guarding chunk-list mutation and insert_chunk_id.
  std::mutex& append_lock() { return append_mutex_; }

  /// Appends a new mutable chunk; the caller must hold the append lock.
  /// With use_for_inserts, insert_chunk_id moves to the new chunk.
  ChunkId append_mutable_chunk_locked(bool use_for_inserts);

  /// Convenience wrapper taking the append lock itself.
  ChunkId append_mutable_chunk(bool use_for_inserts);

  /// Physically deletes a chunk's storage iff its cleanup commit id is set
  /// and below the given lowest active snapshot. Returns whether deleted.
  bool physically_delete_if_safe(ChunkId id, CommitId lowest_active_snapshot);

  /// Sum of published row counts over live chunks (physical rows, including
  /// invalidated ones).
  uint64_t physical_row_count() const;

  /// Byte estimate per the documented model in memory_model.hpp.
  uint64_t estimate_memory() const;

 private:
  TableSchema schema_;
  uint32_t chunk_capacity_;
  mutable std::mutex append_mutex_;
  std::vector<std::shared_ptr<Chunk>> chunks_;
  std::atomic<ChunkId> insert_chunk_id_{0};
};

}  // namespace strata
