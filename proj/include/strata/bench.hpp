#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "strata/clustering.hpp"
#include "strata/mvcc.hpp"
#include "strata/table.hpp"

namespace strata {

/// Concurrent update load driven against a table while clustering runs. Each
/// update picks a uniformly random visible row, invalidates it, and reinserts
/// the row with a modified payload value — by default in a column that is
/// neither a clustering column nor the sort column, so clustering-relevant
/// values stay stable; `mutate_clustering_column` redirects the modification
/// to the first clustering column for stress testing.
struct UpdateLoadOptions {
  uint32_t threads = 0;
  double updates_per_second = 0.0;  ///< total across threads; <= 0 disables updates
  uint64_t max_duration_ms = 60000; ///< updater deadline if clustering runs longer
  bool mutate_clustering_column = false;
  uint64_t seed = 0;
  bool record_updates = false;  ///< capture (old row, new row) per committed update
};

struct UpdateLoadResult {
  uint64_t attempted = 0;  ///< a visible row was found and the update was tried
  uint64_t committed = 0;
  uint64_t conflicts = 0;  ///< row lock unavailable; transaction aborted
  uint64_t wall_ms = 0;
  double achieved_updates_per_second = 0.0;
  std::vector<std::pair<std::vector<Value>, std::vector<Value>>> updates;

  double success_ratio() const {
    return attempted == 0 ? 1.0 : static_cast<double>(committed) / attempted;
  }
};

struct RobustnessResult {
  ClusteringRunReport report;
  UpdateLoadResult updates;
};

/// Committed/total step counts of one kind; an absent phase counts as fully
/// successful.
struct StepSuccess {
  uint64_t committed = 0;
  uint64_t total = 0;

  double ratio() const { return total == 0 ? 1.0 : static_cast<double>(committed) / total; }
};

StepSuccess step_success(const ClusteringRunReport& report, StepKind kind);

/// Runs a full clustering pass while updater threads apply the configured
/// load. Starts all workers behind a common barrier and joins them before
/// returning; rethrows any clustering failure after the join.
RobustnessResult run_clustering_with_updates(TransactionManager& tm, Table& table,
                                             const ClusteringConfig& config,
                                             const UpdateLoadOptions& options);

/// Memory footprint of one clustering run: the table is finalized and
/// dictionary-encoded first, estimate_memory is sampled during the run
/// (config.memory_sample_interval_ms, forced to a positive value), and the
/// peak covers the endpoints as well as every sample.
struct MemoryRunResult {
  uint64_t initial_bytes = 0;
  uint64_t peak_bytes = 0;
  uint64_t final_bytes = 0;
  ClusteringRunReport report;
};

MemoryRunResult run_memory_experiment(TransactionManager& tm, Table& table,
                                      ClusteringConfig config);

}  // namespace strata
