#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strata/histogram.hpp"
#include "strata/mvcc.hpp"
#include "strata/table.hpp"

namespace strata {

/// One cluster's value interval on a single column: low inclusive, high
/// exclusive; an unset side is unbounded.
struct ClusterRange {
  std::optional<Value> low;
  std::optional<Value> high;

  bool contains(const Value& v) const;
};

/// Ordered, gap-free cluster ranges of one clustering column. Consecutive
/// ranges share their boundary value; the last range is unbounded above.
/// Nullable columns carry an extra null-only range at index ranges.size().
struct ColumnBoundaries {
  ColumnId column = kInvalidColumnId;
  std::vector<ClusterRange> ranges;
  bool has_null_range = false;

  size_t range_count() const { return ranges.size() + (has_null_range ? 1 : 0); }
  size_t null_range_index() const { return ranges.size(); }

  /// Index of the range holding `v`. Values below the first range's lower
  /// bound map to range 0 (they can only appear when rows arrived after the
  /// histogram was built); nulls map to the null range.
  size_t assign(const Value& v) const;
};

struct ClusterBoundaries {
  std::vector<ColumnBoundaries> columns;  // one per clustering column, in config order
};

/// Per clustering column, the index of the matched range.
using ClusterKey = std::vector<size_t>;

enum class RunMode { Sequential, BackgroundCleanup, BackgroundCleanupAndEncoding };

const char* run_mode_name(RunMode mode);
std::optional<RunMode> run_mode_from_name(const std::string& name);

struct ClusteringConfig {
  std::vector<ColumnId> clustering_columns;
  std::vector<uint32_t> cluster_counts;  // one per clustering column, >= 1
  ColumnId sort_column = kInvalidColumnId;
  uint64_t merge_row_threshold = 10000;  // chunks at or below this get merged
  uint32_t max_attempts_per_step = 1;
  RunMode run_mode = RunMode::Sequential;
  uint32_t histogram_bins = kDefaultHistogramBins;
  uint64_t background_cleanup_interval_ms = 1000;
  uint64_t memory_sample_interval_ms = 0;  // 0 disables sampling
};

/// Key-value text form ("key = value" lines, '#' comments, columns by name).
std::string format_clustering_config(const ClusteringConfig& config, const TableSchema& schema);
ClusteringConfig parse_clustering_config(const std::string& text, const TableSchema& schema);

enum class StepKind { Partition, Merge, Sort };
enum class StepOutcome { Committed, Aborted };

const char* step_kind_name(StepKind kind);
const char* step_outcome_name(StepOutcome outcome);

struct StepReport {
  StepKind kind = StepKind::Partition;
  std::string target;  // "chunk:<id>" or "cluster:<key>"
  StepOutcome outcome = StepOutcome::Committed;
  uint32_t attempts = 1;
  uint64_t rows_moved = 0;
  uint64_t lock_held_ns = 0;  // first row lock until commit/abort finished
  uint64_t duration_ns = 0;
};

struct MemorySample {
  uint64_t elapsed_ms = 0;
  uint64_t bytes = 0;
};

struct ClusteringRunReport {
  uint64_t boundary_ns = 0;
  uint64_t partition_ns = 0;
  uint64_t merge_ns = 0;
  uint64_t sort_ns = 0;
  uint64_t cleanup_ns = 0;
  std::vector<StepReport> steps;
  uint64_t merged_chunks = 0;
  uint64_t merged_rows = 0;
  uint64_t chunks_deleted = 0;
  std::vector<MemorySample> memory_samples;

  uint64_t committed_steps() const;
  uint64_t aborted_steps() const;
};

/// Writes steps.csv (one row per step) and memory_samples.csv.
void export_clustering_report(const ClusteringRunReport& report, const std::string& directory);

/// Greedy histogram-bin aggregation into cluster ranges. Bins accumulate
/// while the running size stays below ideal = non-null rows / count; a bin
/// that overshoots is included iff the overshoot is smaller than the
/// undershoot, and a bin larger than ideal on its own forms its own cluster.
/// May produce more or fewer ranges than requested.
ClusterBoundaries choose_boundaries(const std::vector<Histogram>& histograms,
                                    const std::vector<uint32_t>& cluster_counts,
                                    const std::vector<bool>& nullable);

/// Range index per clustering column for one row's clustering values
/// (values[i] belongs to boundaries.columns[i]).
ClusterKey assign_cluster(const std::vector<Value>& values, const ClusterBoundaries& boundaries);

/// Online re-clusterer: moves rows of immutable chunks into per-cluster
/// chunks, merges small chunks, and sorts each cluster, each step as one
/// transaction racing ordinary workload transactions. Steps run sequentially
/// on the calling thread; cleanup/encoding may run on background workers
/// depending on the run mode.
class Clusterer {
 public:
  Clusterer(TransactionManager& tm, Table& table, ClusteringConfig config);

  /// Full run: boundaries, partition every immutable chunk, merge small
  /// chunks, sort every cluster, cleanup. Throws std::invalid_argument when
  /// the table has no finalized chunk or the config is inconsistent.
  ClusteringRunReport run();

  /// Computes (and caches) boundaries from the table's current live rows.
  const ClusterBoundaries& compute_boundaries();

  /// Moves one immutable chunk's live rows into their clusters (one
  /// transaction; aborts wholesale on any row-lock conflict).
  StepReport partition_step(ChunkId chunk_id);

  /// Sorts one cluster's chunks into fresh encoded chunks (one transaction
  /// with conflict detection). The empty key addresses the merge cluster.
  StepReport sort_cluster(const ClusterKey& key);

  const ClusterBoundaries& boundaries() const;

  /// Live chunks per cluster after the latest phase; the merge cluster is
  /// keyed by the empty key.
  std::map<ClusterKey, std::vector<ChunkId>> cluster_chunks() const;

 private:
  struct ClusterState {
    std::vector<ChunkId> chunks;
    ChunkId insertion = kInvalidChunkId;
    std::vector<ValueRangeConstraint> constraints;
  };

  ClusterState& cluster_for(const ClusterKey& key);
  std::vector<ValueRangeConstraint> constraints_for(const ClusterKey& key) const;
  void append_cluster_rows(ClusterState& state, const std::vector<std::vector<Value>>& rows,
                           CommitId begin_cid);
  void finalize_insertion_chunks();
  StepReport move_chunk_step(ChunkId chunk_id, bool to_merge_cluster);
  StepReport run_step_with_retries(const std::function<StepReport()>& step);
  std::vector<ChunkId> live_chunks(const ClusterState& state) const;

  TransactionManager& tm_;
  Table& table_;
  ClusteringConfig config_;
  std::optional<ClusterBoundaries> boundaries_;
  std::map<ClusterKey, ClusterState> clusters_;  // empty key = merge cluster
};

}  // namespace strata
