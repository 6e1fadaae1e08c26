#include "strata/mvcc.hpp"

#include <cassert>
#include <stdexcept>

namespace strata {

namespace {
/// Commit id used to tombstone aborted inserts: begin = end = 0 satisfies
/// no snapshot window, so the row is invisible everywhere, forever.
constexpr CommitId kTombstoneCid = 0;
}  // namespace

bool is_visible(CommitId begin_cid, CommitId end_cid, TransactionId row_tid,
                TransactionId ctx_tid, CommitId snapshot_cid) {
  if (row_tid == ctx_tid && ctx_tid != 0 && begin_cid == kUnsetCid) {
    return true;  // own insert, not yet committed
  }
  if (begin_cid == kUnsetCid || begin_cid > snapshot_cid) return false;
  return end_cid == kUnsetCid || end_cid > snapshot_cid;
}

bool TransactionContext::sees(const MvccRowMeta& meta, const RowLocation& loc) const {
  const CommitId begin = meta.begin_cid.load(std::memory_order_acquire);
  const CommitId end = meta.end_cid.load(std::memory_order_acquire);
  const TransactionId row_tid = meta.tid.load(std::memory_order_acquire);
  if (!is_visible(begin, end, row_tid, tid_, snapshot_cid_)) return false;
  // A row this transaction queued for invalidation is already deleted from
  // its own point of view.
  return invalidate_set_.empty() || invalidate_set_.count(loc) == 0;
}

std::shared_ptr<TransactionContext> TransactionManager::begin_transaction() {
  const TransactionId tid = next_tid_.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard<std::mutex> guard(registry_mutex_);
  const CommitId snapshot = last_commit_id_.load(std::memory_order_acquire);
  active_snapshots_.insert(snapshot);
  return std::make_shared<TransactionContext>(tid, snapshot);
}

CommitId TransactionManager::commit(TransactionContext& ctx,
                                    const std::function<void(CommitId)>& on_commit) {
  if (!ctx.is_active()) throw std::logic_error("commit on a non-active transaction");
  ctx.phase_ = TransactionPhase::Committing;

  CommitId cid;
  {
    std::lock_guard<std::mutex> guard(commit_mutex_);
    cid = last_commit_id_.load(std::memory_order_relaxed) + 1;

    for (const auto& loc : ctx.inserted_rows_) {
      auto& meta = loc.table->chunk(loc.chunk_id)->row_meta(loc.offset);
      meta.begin_cid.store(cid, std::memory_order_release);
      meta.tid.store(0, std::memory_order_release);
    }
    for (const auto& loc : ctx.invalidate_queue_) {
      auto chunk = loc.table->chunk(loc.chunk_id);
      auto& meta = chunk->row_meta(loc.offset);
      meta.end_cid.store(cid, std::memory_order_release);
      chunk->mvcc().invalid_row_count.fetch_add(1, std::memory_order_acq_rel);
    }
    for (const auto& loc : ctx.locked_rows_) {
      if (ctx.invalidate_set_.count(loc)) continue;  // invalidated rows stay locked
      loc.table->chunk(loc.chunk_id)->row_meta(loc.offset).tid.store(
          0, std::memory_order_release);
    }

    if (on_commit) on_commit(cid);

    last_commit_id_.store(cid, std::memory_order_release);
  }

  ctx.commit_id_ = cid;
  ctx.phase_ = TransactionPhase::Committed;
  unregister(ctx);
  return cid;
}

void TransactionManager::abort(TransactionContext& ctx) {
  if (!ctx.is_active()) throw std::logic_error("abort on a non-active transaction");

  for (const auto& loc : ctx.locked_rows_) {
    loc.table->chunk(loc.chunk_id)->row_meta(loc.offset).tid.store(0,
                                                                   std::memory_order_release);
  }
  // Tombstone pending inserts: row offsets stay stable, visibility window is
  // empty. The dead tid stays set; tids are never reused, so no transaction
  // can mistake the row for its own.
  for (const auto& loc : ctx.inserted_rows_) {
    auto chunk = loc.table->chunk(loc.chunk_id);
    auto& meta = chunk->row_meta(loc.offset);
    meta.begin_cid.store(kTombstoneCid, std::memory_order_release);
    meta.end_cid.store(kTombstoneCid, std::memory_order_release);
    chunk->mvcc().invalid_row_count.fetch_add(1, std::memory_order_acq_rel);
  }

  ctx.phase_ = TransactionPhase::Aborted;
  unregister(ctx);
}

bool TransactionManager::try_lock_row(TransactionContext& ctx, const RowLocation& loc) {
  if (!ctx.is_active()) return false;
  auto chunk = loc.table->chunk(loc.chunk_id);
  auto& meta = chunk->row_meta(loc.offset);
  // Invalidated rows keep their lock bit, but check explicitly so the rule
  // does not depend on that detail.
  if (meta.end_cid.load(std::memory_order_acquire) != kUnsetCid) return false;
  TransactionId expected = 0;
  if (!meta.tid.compare_exchange_strong(expected, ctx.tid_, std::memory_order_acq_rel)) {
    // Re-locking a row we already hold is a no-op success.
    return expected == ctx.tid_;
  }
  ctx.locked_rows_.push_back(loc);
  ctx.locked_set_.insert(loc);
  return true;
}

bool TransactionManager::invalidate_row(TransactionContext& ctx, const RowLocation& loc) {
  if (!ctx.is_active()) return false;
  if (!ctx.locked_set_.count(loc)) return false;
  if (ctx.invalidate_set_.insert(loc).second) ctx.invalidate_queue_.push_back(loc);
  return true;
}

std::vector<RowLocation> TransactionManager::insert_rows(
    TransactionContext& ctx, Table& table, const std::vector<std::vector<Value>>& rows,
    std::optional<ChunkId> target_chunk) {
  if (!ctx.is_active()) throw std::logic_error("insert on a non-active transaction");
  const size_t column_count = table.schema().column_count();
  for (const auto& row : rows) {
    if (row.size() != column_count) {
      throw std::invalid_argument("row arity does not match the table schema");
    }
  }

  std::vector<RowLocation> locations;
  locations.reserve(rows.size());
  size_t next_row = 0;

  while (next_row < rows.size()) {
    const ChunkId chunk_id = target_chunk ? *target_chunk : table.insert_chunk_id();
    auto chunk = table.chunk(chunk_id);
    if (!chunk) {
      if (target_chunk) throw std::logic_error("insert target chunk was deleted");
      // The dedicated insert chunk was finalized, retired, and physically
      // dropped (e.g. by a reclustering pass) before anyone inserted again.
      // Treat it like a full chunk: advance to a fresh one and retry.
      std::lock_guard<std::mutex> guard(table.append_lock());
      if (table.insert_chunk_id() == chunk_id) {
        table.append_mutable_chunk_locked(/*use_for_inserts=*/true);
      }
      continue;
    }
    if (target_chunk && !chunk->is_mutable()) {
      throw std::logic_error("insert target chunk is immutable");
    }

    const uint32_t remaining = static_cast<uint32_t>(rows.size() - next_row);
    const uint32_t appended = chunk->append_rows(remaining, [&](ChunkOffset slot,
                                                                uint32_t row) {
      const auto& values = rows[next_row + row];
      for (ColumnId column = 0; column < column_count; ++column) {
        chunk->write_value(column, slot, values[column]);
      }
      // Claim the row before it becomes visible to lockers; begin stays
      // unset until commit.
      chunk->row_meta(slot).tid.store(ctx.tid_, std::memory_order_release);
      locations.push_back(RowLocation{&table, chunk_id, slot});
    });
    next_row += appended;

    // A chunk that just reached capacity is sealed immediately so its zone
    // maps become available. finalize() is idempotent and cheap to repeat.
    if (chunk->size() == chunk->capacity()) chunk->finalize();

    if (next_row < rows.size()) {
      if (target_chunk) throw std::logic_error("insert target chunk is full");
      // Full (or finalized) insert chunk: advance it under the append lock,
      // unless another inserter already did.
      std::lock_guard<std::mutex> guard(table.append_lock());
      if (table.insert_chunk_id() == chunk_id) {
        table.append_mutable_chunk_locked(/*use_for_inserts=*/true);
      }
    }
  }

  ctx.inserted_rows_.insert(ctx.inserted_rows_.end(), locations.begin(), locations.end());
  // The tid claim doubles as a row lock, so record inserts as locked: the
  // transaction may turn around and invalidate its own uncommitted rows.
  for (const auto& loc : locations) {
    ctx.locked_rows_.push_back(loc);
    ctx.locked_set_.insert(loc);
  }
  return locations;
}

void TransactionManager::mark_chunk_cleanup(Chunk& chunk, CommitId cid) {
  const uint32_t rows = chunk.size();
  for (ChunkOffset row = 0; row < rows; ++row) {
    if (chunk.row_meta(row).end_cid.load(std::memory_order_acquire) == kUnsetCid) {
      throw std::logic_error("mark_chunk_cleanup: chunk still holds a live row");
    }
  }
  chunk.mvcc().cleanup_commit_id.store(cid, std::memory_order_release);
}

uint64_t TransactionManager::run_cleanup(Table& table) {
  uint64_t deleted = 0;
  const CommitId lowest = lowest_active_snapshot();
  const ChunkId count = table.chunk_count();
  for (ChunkId id = 0; id < count; ++id) {
    auto chunk = table.chunk(id);
    if (!chunk) continue;
    if (chunk->mvcc().cleanup_commit_id.load(std::memory_order_acquire) == kUnsetCid) continue;
    if (table.physically_delete_if_safe(id, lowest)) ++deleted;
  }
  return deleted;
}

CommitId TransactionManager::lowest_active_snapshot() const {
  std::lock_guard<std::mutex> guard(registry_mutex_);
  if (active_snapshots_.empty()) {
    return last_commit_id_.load(std::memory_order_acquire) + 1;
  }
  return *active_snapshots_.begin();
}

uint64_t TransactionManager::active_transaction_count() const {
  std::lock_guard<std::mutex> guard(registry_mutex_);
  return active_snapshots_.size();
}

void TransactionManager::unregister(TransactionContext& ctx) {
  std::lock_guard<std::mutex> guard(registry_mutex_);
  const auto it = active_snapshots_.find(ctx.snapshot_cid_);
  assert(it != active_snapshots_.end());
  active_snapshots_.erase(it);
}

}  // namespace strata
