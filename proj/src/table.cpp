#include "strata/table.hpp"

#include <stdexcept>

#include "strata/memory_model.hpp"

namespace strata {

Table::Table(TableSchema schema, uint32_t chunk_capacity)
    : schema_(std::move(schema)), chunk_capacity_(chunk_capacity) {
  if (chunk_capacity_ < 2) {
    throw std::invalid_argument("chunk_capacity must be at least 2");
  }
  if (schema_.column_count() == 0) {
    throw std::invalid_argument("a table needs at least one column");
  }
  chunks_.push_back(std::make_shared<Chunk>(schema_, chunk_capacity_, true));
  insert_chunk_id_.store(0, std::memory_order_release);
}

ChunkId Table::chunk_count() const {
  std::lock_guard<std::mutex> guard(append_mutex_);
  return static_cast<ChunkId>(chunks_.size());
}

std::shared_ptr<Chunk> Table::chunk(ChunkId id) const {
  std::lock_guard<std::mutex> guard(append_mutex_);
  return chunks_.at(id);
}

std::vector<std::shared_ptr<Chunk>> Table::chunk_snapshot() const {
  std::lock_guard<std::mutex> guard(append_mutex_);
  return chunks_;
}

ChunkId Table::append_mutable_chunk_locked(bool use_for_inserts) {
  chunks_.push_back(std::make_shared<Chunk>(schema_, chunk_capacity_, use_for_inserts));
  const ChunkId id = static_cast<ChunkId>(chunks_.size() - 1);
  if (use_for_inserts) insert_chunk_id_.store(id, std::memory_order_release);
  return id;
}

ChunkId Table::append_mutable_chunk(bool use_for_inserts) {
  std::lock_guard<std::mutex> guard(append_mutex_);
  return append_mutable_chunk_locked(use_for_inserts);
}

bool Table::physically_delete_if_safe(ChunkId id, CommitId lowest_active_snapshot) {
  std::shared_ptr<Chunk> victim;
  {
    std::lock_guard<std::mutex> guard(append_mutex_);
    victim = chunks_.at(id);
    if (!victim) return false;  // already deleted
    const CommitId cleanup = victim->mvcc().cleanup_commit_id.load(std::memory_order_acquire);
    if (cleanup == kUnsetCid || cleanup >= lowest_active_snapshot) return false;
    chunks_[id] = nullptr;
  }
  // `victim` keeps the storage alive for readers that snapshotted the chunk
  // list earlier; it is freed once the last such reader drops its reference.
  return true;
}

uint64_t Table::physical_row_count() const {
  uint64_t rows = 0;
  for (const auto& chunk : chunk_snapshot()) {
    if (chunk) rows += chunk->size();
  }
  return rows;
}

uint64_t Table::estimate_memory() const {
  uint64_t bytes = 0;
  for (const auto& chunk : chunk_snapshot()) {
    if (chunk) bytes += chunk->estimate_bytes();
  }
  return bytes;
}

}  // namespace strata
