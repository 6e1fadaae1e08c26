#include "strata/advisor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace strata {
namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

// Ceiling with a small backlash so values within floating error of an
// integer do not get pushed into the next bucket.
double ceil_tolerant(double x) { return std::ceil(x - 1e-9); }

double interpolate(double low, double high, double fraction) {
  return low + (high - low) * fraction;
}

const TableMeta& require_table(const WorkloadSnapshot& snapshot, const std::string& table) {
  const TableMeta* meta = snapshot.find_table(table);
  if (!meta) throw std::invalid_argument("advisor: unknown table '" + table + "'");
  return *meta;
}

const ColumnMeta& require_column(const WorkloadSnapshot& snapshot, const std::string& table,
                                 const std::string& column) {
  const ColumnMeta* meta = snapshot.find_column(table, column);
  if (!meta) {
    throw std::invalid_argument("advisor: unknown column '" + table + "." + column + "'");
  }
  return *meta;
}

std::vector<std::string> clustering_columns_of(const TableClustering& clustering) {
  std::vector<std::string> out;
  out.reserve(clustering.counts.size());
  for (const auto& [column, count] : clustering.counts) out.push_back(column);
  return out;
}

bool sorted_scan_applies(const TableClustering& clustering, const ScanRecord& scan) {
  return clustering.sort_column && *clustering.sort_column == scan.column &&
         scan.sortedness_usable;
}

// Effective input of a scan that can binary-search its sorted column.
double sorted_input(double input, uint32_t chunk_capacity, const ModelConfig& config) {
  if (input <= 1.0) return input;
  if (!config.sorted_scan_per_chunk) return std::log2(input);
  const double capacity = std::max<double>(2.0, chunk_capacity);
  const double chunks = std::max(1.0, ceil_tolerant(input / capacity));
  return 2.0 * std::log2(capacity) * chunks;
}

const std::string& side_table_of(const JoinRecord& join, JoinSide side) {
  return side == JoinSide::Build ? join.build_table : join.probe_table;
}

const std::string& side_column_of(const JoinRecord& join, JoinSide side) {
  return side == JoinSide::Build ? join.build_column : join.probe_column;
}

uint64_t side_materialize_ns(const JoinRecord& join, JoinSide side) {
  return side == JoinSide::Build ? join.mat_build_ns : join.mat_probe_ns;
}

// Combined influence factor a clustering exerts on one materialize step.
double materialize_gains(const JoinRecord& join, JoinSide side, const WorkloadSnapshot& snapshot,
                         const TableClustering& clustering, const ModelConfig& config) {
  const std::string& table = side_table_of(join, side);
  const std::string& column = side_column_of(join, side);
  double gains = 1.0;
  if (join.data_arrives_sorted && clustering.sort_column && *clustering.sort_column == column) {
    const ColumnMeta& column_meta = require_column(snapshot, table, column);
    const TableMeta& table_meta = require_table(snapshot, table);
    gains *= unique_values_factor(column_meta.distinct_count, clustering, column,
                                  table_meta.chunk_capacity, config) *
             config.mat_sort_factor;
  }
  // Chunk density is a property of the probe input: its predicates name the
  // probe table's columns, so the build side takes no density part.
  if (side == JoinSide::Probe) {
    gains *= density_factor(join, clustering, require_table(snapshot, join.probe_table), config);
  }
  return gains;
}

void check_metric_inputs(const std::vector<double>& measured, const std::vector<double>& estimated,
                         const char* name) {
  if (measured.empty() || measured.size() != estimated.size()) {
    throw std::invalid_argument(std::string(name) +
                                " requires equal-length non-empty vectors");
  }
}

std::string join_with(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

bool ClusteringCandidate::has_column(const std::string& column) const {
  return std::binary_search(clustering_columns.begin(), clustering_columns.end(), column);
}

void ModelConfig::validate() const {
  auto check_pair = [](double low, double high, const char* what) {
    if (!(low >= 1.0) || !(high >= low)) {
      throw std::invalid_argument(std::string("model config: ") + what +
                                  " endpoints need 1 <= low <= high");
    }
  };
  check_pair(unique_low, unique_high, "unique-values factor");
  check_pair(density_low, density_high, "density factor");
  if (!(time_per_row_ns > 0)) throw std::invalid_argument("model config: time_per_row must be positive");
  if (!(mat_sort_factor >= 1.0)) throw std::invalid_argument("model config: materialize sort factor must be >= 1");
  if (!(probe_sort_factor >= 1.0)) throw std::invalid_argument("model config: probe sort factor must be >= 1");
  if (!(correlation_penalty >= 1.0)) throw std::invalid_argument("model config: correlation penalty must be >= 1");
  if (join_base_cluster_count == 0) throw std::invalid_argument("model config: join base cluster count must be >= 1");
  if (max_cluster_count == 0) throw std::invalid_argument("model config: max cluster count must be >= 1");
  if (max_dimensionality == 0) throw std::invalid_argument("model config: max dimensionality must be >= 1");
}

std::optional<std::string> CorrelationHints::correlated_with(
    const std::string& table, const std::string& column,
    const std::vector<std::string>& clustering) const {
  for (const std::string& candidate : clustering) {
    for (const auto& [hint_table, a, b] : pairs) {
      if (hint_table != table) continue;
      if ((a == column && b == candidate) || (b == column && a == candidate)) {
        return candidate;
      }
    }
  }
  return std::nullopt;
}

InterestingColumns interesting_columns(const WorkloadSnapshot& snapshot,
                                       const std::string& table) {
  std::set<std::string> scan_columns;
  std::set<std::string> join_columns;
  for (const ScanRecord& scan : snapshot.scans) {
    if (scan.table == table) scan_columns.insert(scan.column);
  }
  for (const JoinRecord& join : snapshot.joins) {
    if (join.build_table == table) join_columns.insert(join.build_column);
    if (join.probe_table == table) join_columns.insert(join.probe_column);
  }
  return {{scan_columns.begin(), scan_columns.end()},
          {join_columns.begin(), join_columns.end()}};
}

std::vector<ClusteringCandidate> generate_candidates(const InterestingColumns& columns,
                                                     uint32_t max_dimensionality) {
  std::set<std::string> all_set(columns.scan_columns.begin(), columns.scan_columns.end());
  all_set.insert(columns.join_columns.begin(), columns.join_columns.end());
  const std::vector<std::string> all(all_set.begin(), all_set.end());

  std::vector<ClusteringCandidate> out;
  std::set<std::pair<std::vector<std::string>, std::string>> seen;
  std::vector<std::string> combo;
  // Enumerates sorted index combinations of the given size.
  auto emit = [&](auto&& self, size_t size, size_t start) -> void {
    if (combo.size() == size) {
      for (const std::string& sort : all) {
        if (seen.emplace(combo, sort).second) out.push_back({combo, sort});
      }
      return;
    }
    for (size_t i = start; i < all.size(); ++i) {
      combo.push_back(all[i]);
      self(self, size, i + 1);
      combo.pop_back();
    }
  };
  const size_t limit = std::min<size_t>(max_dimensionality, all.size());
  for (size_t size = 1; size <= limit; ++size) emit(emit, size, 0);
  return out;
}

ClusterCountSet determine_cluster_counts(const ClusteringCandidate& candidate,
                                         const InterestingColumns& columns,
                                         const WorkloadSnapshot& snapshot,
                                         const std::string& table, const ModelConfig& config) {
  const TableMeta& table_meta = require_table(snapshot, table);
  const double target = std::max<double>(1.0, table_meta.chunk_count);

  // Columns used only in joins get even shares of the chunk count; everything
  // else (scanned, scanned+joined, or workload-unknown) is apportioned by the
  // logarithm of its distinct count. Scanned+joined columns additionally keep
  // the join-column floor.
  std::vector<std::string> join_only;
  std::vector<std::string> scan_like;
  std::set<std::string> both;
  for (const std::string& column : candidate.clustering_columns) {
    const bool in_join = std::binary_search(columns.join_columns.begin(),
                                            columns.join_columns.end(), column);
    const bool in_scan = std::binary_search(columns.scan_columns.begin(),
                                            columns.scan_columns.end(), column);
    if (in_join && !in_scan) {
      join_only.push_back(column);
    } else {
      scan_like.push_back(column);
      if (in_join && in_scan) both.insert(column);
    }
  }

  ClusterCountSet counts;
  if (scan_like.empty() && !join_only.empty()) {
    const double share = ceil_tolerant(std::pow(target, 1.0 / join_only.size()));
    for (const std::string& column : join_only) {
      counts[column] = static_cast<uint32_t>(std::max(1.0, share));
    }
  } else {
    const double base = config.join_base_cluster_count;
    for (const std::string& column : join_only) {
      counts[column] = config.join_base_cluster_count;
    }
    const double available =
        target / std::pow(base, static_cast<double>(join_only.size()));
    double log_sum = 0.0;
    for (const std::string& column : scan_like) {
      const uint64_t distinct = require_column(snapshot, table, column).distinct_count;
      log_sum += std::log(std::max<double>(1.0, distinct));
    }
    for (const std::string& column : scan_like) {
      const uint64_t distinct = require_column(snapshot, table, column).distinct_count;
      const double log_value = std::log(std::max<double>(1.0, distinct));
      const double exponent = log_sum > 0.0 ? log_value / log_sum : 1.0 / scan_like.size();
      double count = std::llround(std::pow(available, exponent));
      if (both.count(column) > 0) count = std::max<double>(count, config.join_base_cluster_count);
      counts[column] = static_cast<uint32_t>(std::max(1.0, count));
    }
  }

  for (auto& [column, count] : counts) {
    const uint64_t distinct = require_column(snapshot, table, column).distinct_count;
    uint64_t clamped = std::min<uint64_t>(count, std::max<uint64_t>(1, distinct));
    clamped = std::min<uint64_t>(clamped, config.max_cluster_count);
    count = static_cast<uint32_t>(std::max<uint64_t>(1, clamped));
  }
  return counts;
}

double estimate_unprunable_part(const std::vector<ScanRecord>& query_scans,
                                const TableClustering& clustering, const ModelConfig& config,
                                const CorrelationHints& hints) {
  const std::vector<std::string> clustered = clustering_columns_of(clustering);
  double part = 1.0;
  for (const ScanRecord& scan : query_scans) {
    if (!scan.pruning_usable) continue;
    std::string column = scan.column;
    double selectivity = scan.selectivity;
    if (!clustering.is_clustered(column)) {
      const auto mapped = hints.correlated_with(scan.table, column, clustered);
      if (!mapped) continue;
      column = *mapped;
      selectivity = std::min(1.0, selectivity * config.correlation_penalty);
    }
    const uint32_t k = clustering.counts.at(column);
    const double covered = std::max(1.0, ceil_tolerant(selectivity * k));
    part *= std::min<double>(covered, k) / k;
  }
  return part;
}

double estimate_scan_latency(const WorkloadSnapshot& snapshot, const std::string& table,
                             const TableClustering& clustering, const ModelConfig& config,
                             const CorrelationHints& hints) {
  const TableMeta& table_meta = require_table(snapshot, table);
  double total = 0.0;
  for (const auto& group : group_scans_by_query(snapshot, table)) {
    const double unprunable = estimate_unprunable_part(group, clustering, config, hints);
    for (size_t i = 0; i < group.size(); ++i) {
      const ScanRecord& scan = group[i];
      double input = i == 0 ? table_meta.row_count * unprunable
                            : static_cast<double>(scan.input_rows);
      if (sorted_scan_applies(clustering, scan)) {
        input = sorted_input(input, table_meta.chunk_capacity, config);
      }
      total += config.time_per_row_ns * (input + scan.output_rows);
    }
  }
  return total;
}

double estimate_unique_values_per_chunk(uint64_t distinct_count, const TableClustering& clustering,
                                        const std::string& column, uint32_t chunk_capacity) {
  double unique = static_cast<double>(distinct_count);
  if (clustering.is_clustered(column)) {
    unique = std::floor(unique / clustering.counts.at(column));
  }
  return std::min<double>(chunk_capacity, unique);
}

double unique_values_factor(uint64_t distinct_count, const TableClustering& clustering,
                            const std::string& column, uint32_t chunk_capacity,
                            const ModelConfig& config) {
  const double per_chunk =
      estimate_unique_values_per_chunk(distinct_count, clustering, column, chunk_capacity);
  const double fraction = chunk_capacity == 0 ? 0.0 : per_chunk / chunk_capacity;
  return interpolate(config.unique_low, config.unique_high, fraction);
}

double estimate_chunk_count(const JoinRecord& join, const TableClustering& clustering,
                            const TableMeta& probe_table) {
  const double capacity = std::max<double>(1.0, probe_table.chunk_capacity);
  const double input = static_cast<double>(join.probe_input_rows);
  const double upper = probe_table.chunk_count;
  const double lower = std::min(input / capacity, upper);
  double density = 1.0;
  for (const auto& [column, selectivity] : join.probe_side_predicates) {
    if (!clustering.is_clustered(column)) density *= selectivity;
  }
  if (density <= 0.0) return upper;
  return std::clamp(input / (capacity * density), lower, upper);
}

double density_factor(const JoinRecord& join, const TableClustering& clustering,
                      const TableMeta& probe_table, const ModelConfig& config) {
  const double capacity = std::max<double>(1.0, probe_table.chunk_capacity);
  const double lower =
      std::min(join.probe_input_rows / capacity, static_cast<double>(probe_table.chunk_count));
  const double upper = probe_table.chunk_count;
  const double estimated = estimate_chunk_count(join, clustering, probe_table);
  double fraction = 0.0;
  if (upper > lower) {
    fraction = std::clamp((estimated - lower) / (upper - lower), 0.0, 1.0);
  }
  return interpolate(config.density_low, config.density_high, fraction);
}

double estimate_materialize_step(const JoinRecord& join, JoinSide side,
                                 const WorkloadSnapshot& snapshot, const std::string& table,
                                 const TableClustering& candidate, const TableClustering& current,
                                 const ModelConfig& config) {
  const double recorded = static_cast<double>(side_materialize_ns(join, side));
  if (side_table_of(join, side) != table) return recorded;
  const double current_gains = materialize_gains(join, side, snapshot, current, config);
  const double new_gains = materialize_gains(join, side, snapshot, candidate, config);
  return recorded * current_gains / new_gains;
}

double estimate_probe_step(const JoinRecord& join, const std::string& table,
                           const TableClustering& candidate, const TableClustering& current,
                           const ModelConfig& config) {
  const double recorded = static_cast<double>(join.probe_ns);
  if (join.probe_table != table) return recorded;
  auto benefits = [&](const TableClustering& clustering) {
    return join.data_arrives_sorted && clustering.sort_column &&
           *clustering.sort_column == join.probe_column;
  };
  double factor = 1.0;
  if (benefits(current)) factor *= config.probe_sort_factor;
  if (benefits(candidate)) factor /= config.probe_sort_factor;
  return recorded * factor;
}

double estimate_join_latency(const WorkloadSnapshot& snapshot, const std::string& table,
                             const TableClustering& candidate, const TableClustering& current,
                             const ModelConfig& config) {
  double total = 0.0;
  for (const JoinRecord& join : snapshot.joins) {
    total += estimate_materialize_step(join, JoinSide::Build, snapshot, table, candidate,
                                       current, config);
    total += estimate_materialize_step(join, JoinSide::Probe, snapshot, table, candidate,
                                       current, config);
    total += static_cast<double>(join.radix_ns);
    total += static_cast<double>(join.build_ns);
    total += estimate_probe_step(join, table, candidate, current, config);
    total += static_cast<double>(join.output_ns);
  }
  return total;
}

TableClustering current_clustering_from_meta(const WorkloadSnapshot& snapshot,
                                             const std::string& table) {
  TableClustering clustering;
  for (const ColumnMeta& column : snapshot.columns) {
    if (column.table == table && column.sorted_by) {
      clustering.sort_column = column.column;
      break;
    }
  }
  return clustering;
}

std::vector<Suggestion> rank(const WorkloadSnapshot& snapshot, const std::string& table,
                             const ModelConfig& config, const CorrelationHints& hints,
                             const std::optional<TableClustering>& current) {
  config.validate();
  for (const auto& [hint_table, a, b] : hints.pairs) {
    require_column(snapshot, hint_table, a);
    require_column(snapshot, hint_table, b);
  }
  const TableMeta& table_meta = require_table(snapshot, table);
  const TableClustering current_clustering =
      current ? *current : current_clustering_from_meta(snapshot, table);
  const InterestingColumns columns = interesting_columns(snapshot, table);
  const std::vector<ClusteringCandidate> candidates =
      generate_candidates(columns, config.max_dimensionality);

  double carried = 0.0;
  for (const ScanRecord& scan : snapshot.scans) {
    if (scan.table != table) carried += static_cast<double>(scan.runtime_ns);
  }
  const auto groups = group_scans_by_query(snapshot, table);

  // The scan model's absolute costs are anchored on the recorded runtimes:
  // each scan contributes recorded * cost(candidate)/cost(current), so a
  // candidate equal to the current clustering reproduces the recordings and
  // scaling every recording scales every estimate alike.
  auto scan_estimate = [&](const TableClustering& candidate_clustering) {
    double total = 0.0;
    for (const auto& group : groups) {
      const double unprunable_candidate =
          estimate_unprunable_part(group, candidate_clustering, config, hints);
      const double unprunable_current =
          estimate_unprunable_part(group, current_clustering, config, hints);
      for (size_t i = 0; i < group.size(); ++i) {
        const ScanRecord& scan = group[i];
        double in_candidate = i == 0 ? table_meta.row_count * unprunable_candidate
                                     : static_cast<double>(scan.input_rows);
        double in_current = i == 0 ? table_meta.row_count * unprunable_current
                                   : static_cast<double>(scan.input_rows);
        if (sorted_scan_applies(candidate_clustering, scan)) {
          in_candidate = sorted_input(in_candidate, table_meta.chunk_capacity, config);
        }
        if (sorted_scan_applies(current_clustering, scan)) {
          in_current = sorted_input(in_current, table_meta.chunk_capacity, config);
        }
        const double cost_candidate = in_candidate + scan.output_rows;
        const double cost_current = in_current + scan.output_rows;
        total += cost_current > 0.0 ? scan.runtime_ns * (cost_candidate / cost_current)
                                    : static_cast<double>(scan.runtime_ns);
      }
    }
    return total;
  };

  std::vector<Suggestion> suggestions;
  suggestions.reserve(candidates.size());
  for (const ClusteringCandidate& candidate : candidates) {
    ClusterCountSet counts = determine_cluster_counts(candidate, columns, snapshot, table, config);
    const TableClustering view{counts, candidate.sort_column};
    LatencyEstimate estimate;
    estimate.scan_ns = scan_estimate(view);
    estimate.join_ns = estimate_join_latency(snapshot, table, view, current_clustering, config);
    estimate.carried_ns = carried;
    estimate.total_ns = estimate.scan_ns + estimate.join_ns + estimate.carried_ns;
    suggestions.push_back({candidate, std::move(counts), estimate});
  }

  std::stable_sort(suggestions.begin(), suggestions.end(),
                   [](const Suggestion& a, const Suggestion& b) {
                     if (a.estimate.total_ns != b.estimate.total_ns) {
                       return a.estimate.total_ns < b.estimate.total_ns;
                     }
                     if (a.candidate.clustering_columns != b.candidate.clustering_columns) {
                       return a.candidate.clustering_columns < b.candidate.clustering_columns;
                     }
                     return a.candidate.sort_column < b.candidate.sort_column;
                   });
  if (suggestions.size() > config.suggestion_count) {
    suggestions.resize(config.suggestion_count);
  }
  return suggestions;
}

double relative_error(double measured, double estimated) {
  if (!(estimated > 0.0)) {
    throw std::invalid_argument("relative error requires a positive estimate");
  }
  return measured / estimated;
}

double mse(const std::vector<double>& measured, const std::vector<double>& estimated) {
  check_metric_inputs(measured, estimated, "mse");
  double sum = 0.0;
  for (size_t i = 0; i < measured.size(); ++i) {
    const double diff = measured[i] - estimated[i];
    sum += diff * diff;
  }
  return sum / measured.size();
}

double smape(const std::vector<double>& measured, const std::vector<double>& estimated) {
  check_metric_inputs(measured, estimated, "smape");
  double sum = 0.0;
  for (size_t i = 0; i < measured.size(); ++i) {
    const double denom = std::abs(measured[i]) + std::abs(estimated[i]);
    if (denom > 0.0) sum += 2.0 * std::abs(measured[i] - estimated[i]) / denom;
  }
  return 100.0 * sum / measured.size();
}

namespace {

// Joins of one run keyed by (query, occurrence within the query), so runs
// over identical query sets pair up positionally.
std::map<std::pair<std::string, size_t>, const JoinRecord*> joins_by_key(
    const WorkloadSnapshot& snapshot) {
  std::map<std::pair<std::string, size_t>, const JoinRecord*> out;
  std::map<std::string, size_t> next_occurrence;
  for (const JoinRecord& join : snapshot.joins) {
    out.emplace(std::make_pair(join.query_id, next_occurrence[join.query_id]++), &join);
  }
  return out;
}

}  // namespace

ModelConfig calibrate(const std::vector<CalibrationRun>& runs, const std::string& table,
                      const ModelConfig& base) {
  base.validate();
  if (runs.size() < 2) {
    throw std::invalid_argument("calibration needs at least two recorded runs");
  }
  auto scan_keys = [](const WorkloadSnapshot& snapshot) {
    std::vector<std::pair<std::string, uint32_t>> keys;
    keys.reserve(snapshot.scans.size());
    for (const ScanRecord& scan : snapshot.scans) keys.emplace_back(scan.query_id, scan.seq);
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  auto join_keys = [](const WorkloadSnapshot& snapshot) {
    std::vector<std::string> keys;
    keys.reserve(snapshot.joins.size());
    for (const JoinRecord& join : snapshot.joins) keys.push_back(join.query_id);
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  for (size_t i = 1; i < runs.size(); ++i) {
    if (scan_keys(runs[i].snapshot) != scan_keys(runs[0].snapshot) ||
        join_keys(runs[i].snapshot) != join_keys(runs[0].snapshot)) {
      throw std::invalid_argument("calibration runs cover different query sets");
    }
  }

  ModelConfig fitted = base;

  // Least squares through the origin: runtime ~ time_per_row * (input + output).
  double numerator = 0.0;
  double denominator = 0.0;
  for (const CalibrationRun& run : runs) {
    for (const ScanRecord& scan : run.snapshot.scans) {
      const double x = static_cast<double>(scan.input_rows) + scan.output_rows;
      numerator += static_cast<double>(scan.runtime_ns) * x;
      denominator += x * x;
    }
  }
  if (denominator > 0.0) fitted.time_per_row_ns = numerator / denominator;

  std::vector<std::map<std::pair<std::string, size_t>, const JoinRecord*>> keyed;
  keyed.reserve(runs.size());
  for (const CalibrationRun& run : runs) keyed.push_back(joins_by_key(run.snapshot));

  // Cross-estimates every ordered run pair (source recording -> target
  // clustering) and scores against the target's recording.
  auto step_smape = [&](const ModelConfig& config, bool materialize) -> std::optional<double> {
    std::vector<double> measured;
    std::vector<double> estimated;
    for (size_t i = 0; i < runs.size(); ++i) {
      for (size_t j = 0; j < runs.size(); ++j) {
        if (i == j) continue;
        for (const auto& [key, source] : keyed[i]) {
          const JoinRecord* target = keyed[j].at(key);
          if (materialize) {
            for (const JoinSide side : {JoinSide::Build, JoinSide::Probe}) {
              if (side_table_of(*source, side) != table) continue;
              estimated.push_back(estimate_materialize_step(*source, side, runs[i].snapshot,
                                                            table, runs[j].clustering,
                                                            runs[i].clustering, config));
              measured.push_back(static_cast<double>(side_materialize_ns(*target, side)));
            }
          } else if (source->probe_table == table) {
            estimated.push_back(estimate_probe_step(*source, table, runs[j].clustering,
                                                    runs[i].clustering, config));
            measured.push_back(static_cast<double>(target->probe_ns));
          }
        }
      }
    }
    if (measured.empty()) return std::nullopt;
    return smape(measured, estimated);
  };

  // Probe sort factor: 1.0..2.0 in steps of 0.05; first minimum wins.
  if (step_smape(fitted, /*materialize=*/false)) {
    double best_factor = fitted.probe_sort_factor;
    double best_score = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 20; ++step) {
      ModelConfig config = fitted;
      config.probe_sort_factor = 1.0 + 0.05 * step;
      const double score = *step_smape(config, /*materialize=*/false);
      if (score < best_score - 1e-12) {
        best_score = score;
        best_factor = config.probe_sort_factor;
      }
    }
    fitted.probe_sort_factor = best_factor;
  }

  // Materialize factors: joint grid over the unique-values and density upper
  // endpoints and the sort factor, each 1.0..2.0 in steps of 0.1 with the
  // lower endpoints pinned at 1.0; first minimum wins.
  if (step_smape(fitted, /*materialize=*/true)) {
    double best_unique = fitted.unique_high;
    double best_density = fitted.density_high;
    double best_sort = fitted.mat_sort_factor;
    double best_score = std::numeric_limits<double>::infinity();
    for (int u = 0; u <= 10; ++u) {
      for (int d = 0; d <= 10; ++d) {
        for (int m = 0; m <= 10; ++m) {
          ModelConfig config = fitted;
          config.unique_low = 1.0;
          config.density_low = 1.0;
          config.unique_high = 1.0 + 0.1 * u;
          config.density_high = 1.0 + 0.1 * d;
          config.mat_sort_factor = 1.0 + 0.1 * m;
          const double score = *step_smape(config, /*materialize=*/true);
          if (score < best_score - 1e-12) {
            best_score = score;
            best_unique = config.unique_high;
            best_density = config.density_high;
            best_sort = config.mat_sort_factor;
          }
        }
      }
    }
    fitted.unique_low = 1.0;
    fitted.density_low = 1.0;
    fitted.unique_high = best_unique;
    fitted.density_high = best_density;
    fitted.mat_sort_factor = best_sort;
  }
  return fitted;
}

void export_suggestions_csv(const std::vector<Suggestion>& suggestions,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "rank,clustering_columns,cluster_counts,sort_column,scan_ns,join_ns,carried_ns,"
         "total_ns\n";
  for (size_t i = 0; i < suggestions.size(); ++i) {
    const Suggestion& s = suggestions[i];
    std::vector<std::string> counts;
    counts.reserve(s.counts.size());
    for (const auto& [column, count] : s.counts) {
      counts.push_back(column + ":" + std::to_string(count));
    }
    out << (i + 1) << ',' << join_with(s.candidate.clustering_columns, ';') << ','
        << join_with(counts, ';') << ',' << s.candidate.sort_column << ','
        << format_double(s.estimate.scan_ns) << ',' << format_double(s.estimate.join_ns) << ','
        << format_double(s.estimate.carried_ns) << ',' << format_double(s.estimate.total_ns)
        << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void export_evaluation_csv(const std::vector<EvaluationRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "op,query_id,measured_ns,estimated_ns,relative_error\n";
  std::vector<double> measured;
  std::vector<double> estimated;
  measured.reserve(rows.size());
  estimated.reserve(rows.size());
  for (const EvaluationRow& row : rows) {
    out << row.op << ',' << row.query_id << ',' << format_double(row.measured_ns) << ','
        << format_double(row.estimated_ns) << ',';
    if (row.estimated_ns > 0.0) out << format_double(row.measured_ns / row.estimated_ns);
    out << '\n';
    measured.push_back(row.measured_ns);
    estimated.push_back(row.estimated_ns);
  }
  if (!rows.empty()) {
    out << "mse,all,,," << format_double(mse(measured, estimated)) << '\n';
    out << "smape,all,,," << format_double(smape(measured, estimated)) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace strata
