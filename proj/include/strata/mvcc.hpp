#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <unordered_set>
#include <vector>

#include "strata/table.hpp"
#include "strata/types.hpp"

namespace strata {

struct RowLocation {
  Table* table = nullptr;
  ChunkId chunk_id = kInvalidChunkId;
  ChunkOffset offset = 0;
  bool operator==(const RowLocation&) const = default;
};

struct RowLocationHash {
  size_t operator()(const RowLocation& loc) const {
    const size_t h = std::hash<const void*>()(loc.table);
    return h ^ (uint64_t{loc.chunk_id} << 32 | loc.offset) * 0x9e3779b97f4a7c15ull;
  }
};

enum class TransactionPhase : uint8_t { Active, Committing, Committed, Aborted };

/// Per-transaction state: snapshot, pending inserts, held row locks, and
/// queued invalidations. A context is used from one thread at a time.
class TransactionContext {
 public:
  TransactionContext(TransactionId tid, CommitId snapshot_cid)
      : tid_(tid), snapshot_cid_(snapshot_cid) {}

  TransactionId tid() const { return tid_; }
  CommitId snapshot_cid() const { return snapshot_cid_; }
  TransactionPhase phase() const { return phase_; }
  bool is_active() const { return phase_ == TransactionPhase::Active; }

  /// Commit id assigned at commit; kUnsetCid before/without one.
  CommitId commit_id() const { return commit_id_; }

  /// Visibility of a row given its metadata. Covers the snapshot window,
  /// own uncommitted inserts, and rows this transaction queued for
  /// invalidation (which it must no longer see).
  bool sees(const MvccRowMeta& meta, const RowLocation& loc) const;

  const std::vector<RowLocation>& inserted_rows() const { return inserted_rows_; }
  const std::vector<RowLocation>& locked_rows() const { return locked_rows_; }
  const std::vector<RowLocation>& pending_invalidations() const { return invalidate_queue_; }

  bool holds_lock(const RowLocation& loc) const { return locked_set_.count(loc) > 0; }
  bool has_queued_invalidation(const RowLocation& loc) const {
    return invalidate_set_.count(loc) > 0;
  }

 private:
  friend class TransactionManager;

  TransactionId tid_;
  CommitId snapshot_cid_;
  TransactionPhase phase_ = TransactionPhase::Active;
  CommitId commit_id_ = kUnsetCid;

  std::vector<RowLocation> inserted_rows_;
  std::vector<RowLocation> locked_rows_;
  std::unordered_set<RowLocation, RowLocationHash> locked_set_;
  std::vector<RowLocation> invalidate_queue_;
  std::unordered_set<RowLocation, RowLocationHash> invalidate_set_;
};

/// Pure visibility rule: begin_cid <= snapshot < end_cid, with the own-insert
/// exception (tid match on a row whose begin is still unset).
bool is_visible(CommitId begin_cid, CommitId end_cid, TransactionId row_tid,
                TransactionId ctx_tid, CommitId snapshot_cid);

/// Snapshot-isolation transaction manager over insert-only tables.
///
/// Commit protocol: a single commit mutex spans commit-id allocation, the
/// per-row begin/end publications, an optional caller hook, and the
/// last-commit-id publication. New transactions therefore never observe a
/// half-applied commit; concurrent visibility checks see per-row atomic
/// before/after states, which the snapshot rule tolerates.
class TransactionManager {
 public:
  std::shared_ptr<TransactionContext> begin_transaction();

  /// Commits pending work: inserted rows get begin_cid = cid and their lock
  /// cleared; queued invalidations set end_cid = cid and bump the chunk's
  /// invalid counter (their lock stays set — invalidated rows count as under
  /// modification forever); remaining locks are released. `on_commit`, when
  /// given, runs inside the commit critical section after those
  /// publications, with the fresh commit id.
  CommitId commit(TransactionContext& ctx,
                  const std::function<void(CommitId)>& on_commit = nullptr);

  /// Reverts pending work: releases locks, neutralizes inserted rows by
  /// tombstoning them (begin = end = 0, invisible to every snapshot).
  void abort(TransactionContext& ctx);

  /// Atomically claims the row lock (tid 0 -> ctx.tid). Fails when another
  /// transaction holds the row or the row was invalidated (invalidated rows
  /// keep their lock and count as under modification).
  bool try_lock_row(TransactionContext& ctx, const RowLocation& loc);

  /// Queues an invalidation for a row whose lock ctx holds; applied at
  /// commit, discarded at abort. Returns false when the lock is not held.
  bool invalidate_row(TransactionContext& ctx, const RowLocation& loc);

  /// Inserts rows (row-major) into the table's designated insert chunk, or
  /// into an explicit target chunk. Appends fresh insert chunks under the
  /// table append lock as needed. Rows carry ctx's lock and stay invisible
  /// to others until commit.
  std::vector<RowLocation> insert_rows(TransactionContext& ctx, Table& table,
                                       const std::vector<std::vector<Value>>& rows,
                                       std::optional<ChunkId> target_chunk = std::nullopt);

  /// Declares a chunk logically deleted as of `cid`. Every row must already
  /// carry an end_cid; throws std::logic_error otherwise.
  static void mark_chunk_cleanup(Chunk& chunk, CommitId cid);

  /// Physically deletes every safe fully-invalidated chunk; returns how many.
  uint64_t run_cleanup(Table& table);

  CommitId last_commit_id() const { return last_commit_id_.load(std::memory_order_acquire); }

  /// Minimum snapshot among active transactions; last_commit_id() + 1 when
  /// none are active.
  CommitId lowest_active_snapshot() const;

  uint64_t active_transaction_count() const;

private:
  void unregister(TransactionContext& ctx);

  std::atomic<TransactionId> next_tid_{1};
  std::atomic<CommitId> last_commit_id_{0};
  std::mutex commit_mutex_;

  mutable std::mutex registry_mutex_;
  std::multiset<CommitId> active_snapshots_;
};

}  // namespace strata
