#pragma once

// Workload-driven clustering advisor: generates clustering candidates from
// the recorded workload, picks per-column cluster counts, estimates scan and
// hash-join latencies under each hypothetical clustering, and ranks the
// candidates. All functions are pure over an immutable WorkloadSnapshot.

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "strata/workload.hpp"

namespace strata {

// One hypothetical physical design for a table: an unordered set of
// clustering columns plus one sort column (which need not be clustered).
struct ClusteringCandidate {
  std::vector<std::string> clustering_columns;  // kept sorted + unique
  std::string sort_column;

  bool operator==(const ClusteringCandidate&) const = default;
  bool has_column(const std::string& column) const;
};

// Cluster count per clustering column.
using ClusterCountSet = std::map<std::string, uint32_t>;

// A table's (current or hypothetical) clustering as the estimators compare
// against: counts may be empty when the layout is unclustered or unknown.
struct TableClustering {
  ClusterCountSet counts;
  std::optional<std::string> sort_column;

  bool is_clustered(const std::string& column) const { return counts.count(column) > 0; }
};

// Model constants. The factor endpoints and sort factors are placeholders
// until calibrate() fits them against recorded runs.
struct ModelConfig {
  double time_per_row_ns = 1.0;   // absolute scan cost per row
  double unique_low = 1.0;        // unique-values factor endpoints
  double unique_high = 1.4;
  double density_low = 1.0;       // density factor endpoints
  double density_high = 1.5;
  double mat_sort_factor = 1.3;   // materialize benefit of sorted arrival
  double probe_sort_factor = 1.2; // probe benefit of sorted arrival
  double correlation_penalty = 2.0;  // selectivity multiplier, capped at 1
  uint32_t join_base_cluster_count = 3;
  uint32_t max_cluster_count = 100;
  uint32_t max_dimensionality = 2;  // largest clustering-column set generated
  uint32_t suggestion_count = 5;    // how many ranked suggestions to return
  // Sorted-scan input shrink: false = log2 of the whole input; true = twice
  // log2(chunk capacity) per scanned chunk (the alternative per-chunk
  // reading; kept switchable for experimentation).
  bool sorted_scan_per_chunk = false;

  void validate() const;  // throws std::invalid_argument on bad endpoints
};

// User-supplied column-correlation knowledge, per table. Symmetric pairs.
struct CorrelationHints {
  std::vector<std::tuple<std::string, std::string, std::string>> pairs;  // table, a, b

  // The first clustering column of `clustering` that `column` is hinted
  // correlated with, if any.
  std::optional<std::string> correlated_with(const std::string& table, const std::string& column,
                                             const std::vector<std::string>& clustering) const;
};

struct LatencyEstimate {
  double scan_ns = 0.0;     // estimated scans on the advised table
  double join_ns = 0.0;     // all joins (unaffected steps carried at recorded)
  double carried_ns = 0.0;  // recorded scans on other tables
  double total_ns = 0.0;    // always the sum of the three parts
};

struct Suggestion {
  ClusteringCandidate candidate;
  ClusterCountSet counts;
  LatencyEstimate estimate;
};

// Columns the workload makes interesting for a table, split by usage.
struct InterestingColumns {
  std::vector<std::string> scan_columns;  // sorted + unique
  std::vector<std::string> join_columns;  // sorted + unique
};

InterestingColumns interesting_columns(const WorkloadSnapshot& snapshot,
                                       const std::string& table);

// All clustering-column subsets of size 1..d crossed with every interesting
// column as sort column, deduplicated.
std::vector<ClusteringCandidate> generate_candidates(const InterestingColumns& columns,
                                                     uint32_t max_dimensionality);

// Cluster counts for one candidate. Join-only candidates split the chunk
// count evenly (each of j columns gets ceil(target^(1/j))); otherwise join
// columns get the base count and the remaining budget is apportioned over
// scan columns proportionally to the logarithm of their distinct counts.
// Every count is clamped to [1, min(distinct_count, max_cluster_count)].
ClusterCountSet determine_cluster_counts(const ClusteringCandidate& candidate,
                                         const InterestingColumns& columns,
                                         const WorkloadSnapshot& snapshot,
                                         const std::string& table, const ModelConfig& config);

// Fraction of the table that chunk pruning cannot skip for one query's scans
// under `clustering`: product of ceil(sel * k) / k over pruning-usable scans
// on clustering columns; 1 if none apply. Correlation hints redirect a scan
// to its correlated clustering column with a penalized selectivity.
double estimate_unprunable_part(const std::vector<ScanRecord>& query_scans,
                                const TableClustering& clustering, const ModelConfig& config,
                                const CorrelationHints& hints = {});

// Absolute scan-latency model for the table's whole recorded scan set under
// `clustering`: per query, the first scan's input becomes table_rows x
// unprunable part; a scan on the sort column with usable sortedness shrinks
// its input to log2(input); cost is time_per_row * (input + output), summed.
double estimate_scan_latency(const WorkloadSnapshot& snapshot, const std::string& table,
                             const TableClustering& clustering, const ModelConfig& config,
                             const CorrelationHints& hints = {});

// Expected distinct values inside one chunk of `column` under `clustering`.
double estimate_unique_values_per_chunk(uint64_t distinct_count, const TableClustering& clustering,
                                        const std::string& column, uint32_t chunk_capacity);

// Materialize influence factor for the number of distinct values per chunk,
// interpolated between the configured endpoints.
double unique_values_factor(uint64_t distinct_count, const TableClustering& clustering,
                            const std::string& column, uint32_t chunk_capacity,
                            const ModelConfig& config);

// Estimated number of chunks the join's probe input touches under
// `clustering`: input/(capacity*density) clamped to [input/capacity,
// table chunk count], where density multiplies the probe-side predicate
// selectivities on non-clustering columns (predicates on clustering columns
// leave fully dense chunks behind).
double estimate_chunk_count(const JoinRecord& join, const TableClustering& clustering,
                            const TableMeta& probe_table);

// Probe-side chunk-density influence factor, interpolated between the
// configured endpoints over the feasible chunk-count range.
double density_factor(const JoinRecord& join, const TableClustering& clustering,
                      const TableMeta& probe_table, const ModelConfig& config);

enum class JoinSide { Build, Probe };

// One side's materialize-step estimate: recorded latency rescaled by the
// ratio of influence factors under the current vs. the candidate clustering.
// Sides on tables other than `table` are carried unchanged.
double estimate_materialize_step(const JoinRecord& join, JoinSide side,
                                 const WorkloadSnapshot& snapshot, const std::string& table,
                                 const TableClustering& candidate, const TableClustering& current,
                                 const ModelConfig& config);

// Probe-step estimate: recorded latency times the configured sort factor
// when the sorted-arrival benefit applies only under the current clustering,
// divided by it when only under the candidate.
double estimate_probe_step(const JoinRecord& join, const std::string& table,
                           const TableClustering& candidate, const TableClustering& current,
                           const ModelConfig& config);

// Full join model: per join, estimated materialize steps and probe step plus
// recorded radix/build/output, summed over every recorded join.
double estimate_join_latency(const WorkloadSnapshot& snapshot, const std::string& table,
                             const TableClustering& candidate, const TableClustering& current,
                             const ModelConfig& config);

// Generates candidates for `table`, assigns one ClusterCountSet each,
// estimates total workload latency under each, and returns the top
// `config.suggestion_count` ascending by estimated total (stable tie-break
// by clustering columns then sort column). Scan estimates anchor on recorded
// runtimes: recorded * model(candidate)/model(current). `current` defaults
// to the snapshot's metadata (sorted_by column, unclustered counts).
std::vector<Suggestion> rank(const WorkloadSnapshot& snapshot, const std::string& table,
                             const ModelConfig& config, const CorrelationHints& hints = {},
                             const std::optional<TableClustering>& current = std::nullopt);

// The current clustering visible in snapshot metadata: sort column from
// `sorted_by`, counts unknown (empty).
TableClustering current_clustering_from_meta(const WorkloadSnapshot& snapshot,
                                             const std::string& table);

// ---- Estimate-quality metrics ----

// measured/estimated (< 1 means the estimate was too big). estimated must be > 0.
double relative_error(double measured, double estimated);
// Mean of squared differences. Vectors must be equal-length and non-empty.
double mse(const std::vector<double>& measured, const std::vector<double>& estimated);
// Symmetric mean absolute percentage error in [0, 200]; a 0/0 term counts 0.
double smape(const std::vector<double>& measured, const std::vector<double>& estimated);

// ---- Calibration ----

// One recorded run under a known clustering of the advised table.
struct CalibrationRun {
  WorkloadSnapshot snapshot;
  TableClustering clustering;
};

// Fits time_per_row by least squares over all scan records and the factor
// endpoints by grid search minimizing SMAPE of cross-pair step estimates.
// Deterministic; requires at least two runs over identical query sets.
ModelConfig calibrate(const std::vector<CalibrationRun>& runs, const std::string& table,
                      const ModelConfig& base = {});

// ---- Exports ----

// suggestions.csv: rank, clustering columns, counts, sort column, estimate parts.
void export_suggestions_csv(const std::vector<Suggestion>& suggestions,
                            const std::string& path);

// One measured-vs-estimated operator row of an evaluation report.
struct EvaluationRow {
  std::string op;        // "scan" or a join step name
  std::string query_id;
  double measured_ns = 0.0;
  double estimated_ns = 0.0;
};

// evaluation.csv: one row per operator with relative error, then mse/smape
// summary rows.
void export_evaluation_csv(const std::vector<EvaluationRow>& rows, const std::string& path);

}  // namespace strata
