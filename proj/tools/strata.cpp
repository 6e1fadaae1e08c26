// Command-line workbench: synthetic data generation, workload execution and
// capture, clustering advice, clustering application, and the concurrency /
// memory experiment drivers. Every command is deterministic for a fixed
// (inputs, seed) pair except wall-clock duration fields in reports.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "strata/advisor.hpp"
#include "strata/bench.hpp"
#include "strata/catalog.hpp"
#include "strata/clustering.hpp"
#include "strata/csv.hpp"
#include "strata/datagen.hpp"
#include "strata/exec.hpp"
#include "strata/query_text.hpp"
#include "strata/table_io.hpp"
#include "strata/workload.hpp"

namespace {

using namespace strata;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

void ensure_directory(const std::string& dir) { std::filesystem::create_directories(dir); }

std::string table_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

// "key = value" lines with '#' comments; returns pairs in file order.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key = value: " + line);
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: " + text);
  }
}

uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a non-negative integer: " + text);
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument(key + ": not a boolean: " + text);
}

ModelConfig parse_model_config(const std::string& text) {
  ModelConfig config;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "time_per_row_ns") config.time_per_row_ns = parse_double(key, value);
    else if (key == "unique_low") config.unique_low = parse_double(key, value);
    else if (key == "unique_high") config.unique_high = parse_double(key, value);
    else if (key == "density_low") config.density_low = parse_double(key, value);
    else if (key == "density_high") config.density_high = parse_double(key, value);
    else if (key == "mat_sort_factor") config.mat_sort_factor = parse_double(key, value);
    else if (key == "probe_sort_factor") config.probe_sort_factor = parse_double(key, value);
    else if (key == "correlation_penalty") config.correlation_penalty = parse_double(key, value);
    else if (key == "join_base_cluster_count")
      config.join_base_cluster_count = static_cast<uint32_t>(parse_unsigned(key, value));
    else if (key == "max_cluster_count")
      config.max_cluster_count = static_cast<uint32_t>(parse_unsigned(key, value));
    else if (key == "max_dimensionality")
      config.max_dimensionality = static_cast<uint32_t>(parse_unsigned(key, value));
    else if (key == "suggestion_count")
      config.suggestion_count = static_cast<uint32_t>(parse_unsigned(key, value));
    else if (key == "sorted_scan_per_chunk") config.sorted_scan_per_chunk = parse_bool(key, value);
    else throw std::invalid_argument("unknown model option: " + key);
  }
  return config;
}

// Correlation hints: one "table column_a column_b" triple per line.
CorrelationHints parse_hints(const std::string& text) {
  CorrelationHints hints;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string table, a, b, extra;
    if (!(fields >> table)) continue;
    if (!(fields >> a >> b) || (fields >> extra)) {
      throw std::invalid_argument("hint line needs exactly: <table> <column> <column>: " + line);
    }
    hints.pairs.emplace_back(table, a, b);
  }
  return hints;
}

// Global flags, resolvable against an optional defaults file (--config).
struct Globals {
  uint64_t seed = 0;
  uint32_t chunk_capacity_flag = 0;
  std::string config_path;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* capacity_opt = nullptr;

  uint64_t resolved_seed = 0;
  std::optional<uint32_t> capacity_override;

  void resolve() {
    std::optional<uint64_t> config_seed;
    std::optional<uint32_t> config_capacity;
    if (!config_path.empty()) {
      for (const auto& [key, value] : parse_key_values(read_text_file(config_path))) {
        if (key == "seed") config_seed = parse_unsigned(key, value);
        else if (key == "chunk_capacity")
          config_capacity = static_cast<uint32_t>(parse_unsigned(key, value));
        else throw std::invalid_argument("unknown config option: " + key);
      }
    }
    resolved_seed = seed_opt->count() > 0 ? seed : config_seed.value_or(0);
    if (capacity_opt->count() > 0) capacity_override = chunk_capacity_flag;
    else capacity_override = config_capacity;
    if (capacity_override && *capacity_override == 0) {
      throw std::invalid_argument("chunk capacity must be positive");
    }
  }
};

void finalize_non_empty_chunks(Table& table) {
  for (ChunkId id = 0; id < table.chunk_count(); ++id) {
    const auto chunk = table.chunk(id);
    if (chunk && chunk->size() > 0) chunk->finalize();
  }
}

std::string format_ratio(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenArgs {
  std::string spec_path;
  std::string out_dir = ".";
};

int cmd_gen(const GenArgs& args, Globals& globals) {
  globals.resolve();
  DataGenSpec spec = load_datagen_spec(args.spec_path);
  if (globals.capacity_override) spec.chunk_capacity = *globals.capacity_override;

  TransactionManager tm;
  const auto table = generate_table(spec, tm, globals.resolved_seed);
  ensure_directory(args.out_dir);
  const std::string path = (std::filesystem::path(args.out_dir) / (spec.table + ".csv")).string();
  const auto ctx = tm.begin_transaction();
  export_table_csv(*table, *ctx, path);
  tm.abort(*ctx);

  std::cout << "generated " << spec.table << ": " << spec.row_count << " rows, "
            << table->chunk_count() << " chunks, capacity " << spec.chunk_capacity << " -> "
            << path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunArgs {
  std::vector<std::string> table_paths;
  std::string query_path;
  uint32_t repetitions = 1;
  bool reorder = false;
  std::string out_dir;
};

int cmd_run(const RunArgs& args, Globals& globals) {
  globals.resolve();
  TransactionManager tm;
  Catalog catalog;
  for (const std::string& path : args.table_paths) {
    catalog.add(table_stem(path), import_table_csv(tm, path, globals.capacity_override));
  }
  const auto queries = parse_query_file(read_text_file(args.query_path), catalog, args.reorder);

  Executor executor(catalog);
  WorkloadRecorder recorder;
  for (uint32_t rep = 0; rep < args.repetitions; ++rep) {
    for (const QuerySpec& query : queries) {
      const auto ctx = tm.begin_transaction();
      recorder.record_query(executor.run_query(*ctx, query));
      tm.abort(*ctx);
    }
  }
  const WorkloadSnapshot snapshot = recorder.snapshot(catalog);
  ensure_directory(args.out_dir);
  export_csv(snapshot, args.out_dir);

  std::cout << "ran " << queries.size() << " queries x " << args.repetitions << " repetitions: "
            << snapshot.scans.size() << " scan records, " << snapshot.joins.size()
            << " join records -> " << args.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// advise
// ---------------------------------------------------------------------------

struct AdviseArgs {
  std::string workload_dir;
  std::string table;
  uint32_t dimensions = 0;      // 0 = model default
  uint32_t suggestions = 0;     // 0 = model default
  std::string hints_path;
  std::string model_path;
  std::string out_path;
  std::string evaluation_path;
};

std::vector<EvaluationRow> identity_evaluation_rows(const WorkloadSnapshot& snapshot,
                                                    const std::string& table,
                                                    const TableClustering& current,
                                                    const ModelConfig& config,
                                                    const CorrelationHints& hints) {
  std::vector<EvaluationRow> rows;
  const double scan_current = estimate_scan_latency(snapshot, table, current, config, hints);
  const double scan_candidate = scan_current;  // identity: candidate == current
  const double scan_ratio = scan_current > 0 ? scan_candidate / scan_current : 1.0;
  for (const ScanRecord& scan : snapshot.scans) {
    if (scan.table != table) continue;
    rows.push_back({"scan", scan.query_id, static_cast<double>(scan.runtime_ns),
                    scan.runtime_ns * scan_ratio});
  }
  for (const JoinRecord& join : snapshot.joins) {
    rows.push_back({"materialize_build", join.query_id, static_cast<double>(join.mat_build_ns),
                    estimate_materialize_step(join, JoinSide::Build, snapshot, table, current,
                                              current, config)});
    rows.push_back({"materialize_probe", join.query_id, static_cast<double>(join.mat_probe_ns),
                    estimate_materialize_step(join, JoinSide::Probe, snapshot, table, current,
                                              current, config)});
    rows.push_back({"probe", join.query_id, static_cast<double>(join.probe_ns),
                    estimate_probe_step(join, table, current, current, config)});
  }
  return rows;
}

int cmd_advise(const AdviseArgs& args, Globals& globals) {
  globals.resolve();
  const WorkloadSnapshot snapshot = import_csv(args.workload_dir);
  if (snapshot.find_table(args.table) == nullptr) {
    std::cerr << "error: table not present in workload metadata: " << args.table << "\n";
    return 1;
  }

  ModelConfig config =
      args.model_path.empty() ? ModelConfig{} : parse_model_config(read_text_file(args.model_path));
  if (args.dimensions > 0) config.max_dimensionality = args.dimensions;
  if (args.suggestions > 0) config.suggestion_count = args.suggestions;
  config.validate();
  const CorrelationHints hints =
      args.hints_path.empty() ? CorrelationHints{} : parse_hints(read_text_file(args.hints_path));

  const InterestingColumns interesting = interesting_columns(snapshot, args.table);
  if (interesting.scan_columns.empty() && interesting.join_columns.empty()) {
    std::cerr << "error: workload has no scan or join columns on " << args.table
              << "; nothing to advise\n";
    return 2;
  }

  const auto suggestions = rank(snapshot, args.table, config, hints);
  std::cout << "rank  clustering_columns        cluster_counts            sort_column   est_total_ns\n";
  for (size_t i = 0; i < suggestions.size(); ++i) {
    const Suggestion& s = suggestions[i];
    std::string columns;
    for (const std::string& c : s.candidate.clustering_columns) {
      if (!columns.empty()) columns += ';';
      columns += c;
    }
    std::string counts;
    for (const auto& [column, count] : s.counts) {
      if (!counts.empty()) counts += ';';
      counts += column + ":" + std::to_string(count);
    }
    std::printf("%-5zu %-25s %-25s %-13s %.0f\n", i + 1, columns.c_str(), counts.c_str(),
                s.candidate.sort_column.c_str(), s.estimate.total_ns);
  }
  if (!args.out_path.empty()) {
    export_suggestions_csv(suggestions, args.out_path);
    std::cout << "wrote " << suggestions.size() << " suggestions -> " << args.out_path << "\n";
  }
  if (!args.evaluation_path.empty()) {
    const TableClustering current = current_clustering_from_meta(snapshot, args.table);
    export_evaluation_csv(identity_evaluation_rows(snapshot, args.table, current, config, hints),
                          args.evaluation_path);
    std::cout << "wrote evaluation rows -> " << args.evaluation_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// apply
// ---------------------------------------------------------------------------

struct ApplyArgs {
  std::string table_path;
  std::string clustering_path;
  std::string out_dir;
  std::string export_path;
};

int cmd_apply(const ApplyArgs& args, Globals& globals) {
  globals.resolve();
  TransactionManager tm;
  const auto table = import_table_csv(tm, args.table_path, globals.capacity_override);
  finalize_non_empty_chunks(*table);
  const ClusteringConfig config =
      parse_clustering_config(read_text_file(args.clustering_path), table->schema());

  Clusterer clusterer(tm, *table, config);
  const ClusteringRunReport report = clusterer.run();
  ensure_directory(args.out_dir);
  export_clustering_report(report, args.out_dir);

  std::cout << "clustering finished: " << report.committed_steps() << " committed steps, "
            << report.aborted_steps() << " aborted steps\n";
  std::cout << "phases (ns): boundaries " << report.boundary_ns << ", partition "
            << report.partition_ns << ", merge " << report.merge_ns << ", sort " << report.sort_ns
            << ", cleanup " << report.cleanup_ns << "\n";
  std::cout << "merged " << report.merged_rows << " rows from " << report.merged_chunks
            << " chunks; deleted " << report.chunks_deleted << " chunks; "
            << report.memory_samples.size() << " memory samples -> " << args.out_dir << "\n";

  if (!args.export_path.empty()) {
    const auto ctx = tm.begin_transaction();
    export_table_csv(*table, *ctx, args.export_path);
    tm.abort(*ctx);
    std::cout << "exported clustered table -> " << args.export_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Experiment specs (bench-robustness / bench-memory)
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  std::optional<DataGenSpec> generate;
  std::string table_file;
  std::string clustering_text;

  uint32_t updater_threads = 0;
  double updates_per_second = 0.0;
  uint64_t duration_ms = 10000;
  bool mutate_clustering_column = false;
  uint32_t retry_sweep_max_attempts = 0;

  RunMode run_mode = RunMode::Sequential;
  uint64_t sample_interval_ms = 5;
};

ExperimentSpec parse_experiment_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string{"malformed experiment spec: "} + e.what());
  }
  ExperimentSpec spec;
  try {
    if (doc.contains("generate")) spec.generate = parse_datagen_spec(doc["generate"].dump());
    if (doc.contains("table_file")) spec.table_file = doc["table_file"].get<std::string>();
    if (spec.generate.has_value() == !spec.table_file.empty()) {
      throw std::invalid_argument("experiment spec needs exactly one of generate/table_file");
    }
    if (doc.contains("clustering_file")) {
      spec.clustering_text = read_text_file(doc["clustering_file"].get<std::string>());
    } else if (doc.contains("clustering")) {
      const json& clustering = doc["clustering"];
      if (clustering.is_string()) {
        spec.clustering_text = clustering.get<std::string>();
      } else if (clustering.is_array()) {
        for (const json& line : clustering) spec.clustering_text += line.get<std::string>() + "\n";
      } else {
        throw std::invalid_argument("clustering must be a string or an array of lines");
      }
    } else {
      throw std::invalid_argument("experiment spec needs clustering or clustering_file");
    }

    if (doc.contains("robustness")) {
      const json& r = doc["robustness"];
      spec.updater_threads = r.value("updater_threads", 0u);
      spec.updates_per_second = r.value("updates_per_second", 0.0);
      spec.duration_ms = r.value("duration_ms", uint64_t{10000});
      spec.mutate_clustering_column = r.value("mutate_clustering_column", false);
      spec.retry_sweep_max_attempts = r.value("retry_sweep_max_attempts", 0u);
      if (spec.duration_ms == 0) throw std::invalid_argument("duration_ms must be positive");
      if (spec.updates_per_second < 0) {
        throw std::invalid_argument("updates_per_second must be non-negative");
      }
    }
    if (doc.contains("memory")) {
      const json& m = doc["memory"];
      if (m.contains("run_mode")) {
        const auto mode = run_mode_from_name(m["run_mode"].get<std::string>());
        if (!mode) {
          throw std::invalid_argument("unknown run_mode: " + m["run_mode"].get<std::string>());
        }
        spec.run_mode = *mode;
      }
      spec.sample_interval_ms = m.value("sample_interval_ms", uint64_t{5});
      if (spec.sample_interval_ms == 0) {
        throw std::invalid_argument("sample_interval_ms must be positive");
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string{"experiment spec field error: "} + e.what());
  }
  return spec;
}

std::shared_ptr<Table> build_experiment_table(const ExperimentSpec& spec, TransactionManager& tm,
                                              Globals& globals) {
  std::shared_ptr<Table> table;
  if (spec.generate) {
    DataGenSpec gen = *spec.generate;
    if (globals.capacity_override) gen.chunk_capacity = *globals.capacity_override;
    table = generate_table(gen, tm, globals.resolved_seed);
  } else {
    table = import_table_csv(tm, spec.table_file, globals.capacity_override);
  }
  finalize_non_empty_chunks(*table);
  return table;
}

void write_metric_csv(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& metrics) {
  std::string out = "metric,value\n";
  for (const auto& [key, value] : metrics) {
    out += csv_join({key, value}) + "\n";
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// bench-robustness
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string spec_path;
  std::string out_dir;
};

int cmd_bench_robustness(const BenchArgs& args, Globals& globals) {
  globals.resolve();
  const ExperimentSpec spec = parse_experiment_spec(read_text_file(args.spec_path));
  ensure_directory(args.out_dir);

  TransactionManager tm;
  const auto table = build_experiment_table(spec, tm, globals);
  const ClusteringConfig config = parse_clustering_config(spec.clustering_text, table->schema());

  UpdateLoadOptions load;
  load.threads = spec.updater_threads;
  load.updates_per_second = spec.updates_per_second;
  load.max_duration_ms = spec.duration_ms;
  load.mutate_clustering_column = spec.mutate_clustering_column;
  load.seed = globals.resolved_seed;

  const RobustnessResult result = run_clustering_with_updates(tm, *table, config, load);
  const StepSuccess partition = step_success(result.report, StepKind::Partition);
  const StepSuccess merge = step_success(result.report, StepKind::Merge);
  const StepSuccess sort = step_success(result.report, StepKind::Sort);
  const uint64_t total_steps = result.report.steps.size();

  write_metric_csv(
      (std::filesystem::path(args.out_dir) / "robustness.csv").string(),
      {{"partition_committed", std::to_string(partition.committed)},
       {"partition_total", std::to_string(partition.total)},
       {"partition_success_ratio", format_ratio(partition.ratio())},
       {"merge_committed", std::to_string(merge.committed)},
       {"merge_total", std::to_string(merge.total)},
       {"merge_success_ratio", format_ratio(merge.ratio())},
       {"sort_committed", std::to_string(sort.committed)},
       {"sort_total", std::to_string(sort.total)},
       {"sort_success_ratio", format_ratio(sort.ratio())},
       {"overall_committed", std::to_string(result.report.committed_steps())},
       {"overall_total", std::to_string(total_steps)},
       {"overall_success_ratio",
        format_ratio(total_steps == 0
                         ? 1.0
                         : static_cast<double>(result.report.committed_steps()) / total_steps)},
       {"updates_attempted", std::to_string(result.updates.attempted)},
       {"updates_committed", std::to_string(result.updates.committed)},
       {"update_conflicts", std::to_string(result.updates.conflicts)},
       {"update_success_ratio", format_ratio(result.updates.success_ratio())},
       {"target_updates_per_second", format_ratio(spec.updates_per_second)},
       {"achieved_updates_per_second",
        format_ratio(result.updates.achieved_updates_per_second)},
       {"update_wall_ms", std::to_string(result.updates.wall_ms)}});
  export_clustering_report(result.report, args.out_dir);

  std::cout << "partition " << partition.committed << "/" << partition.total << ", merge "
            << merge.committed << "/" << merge.total << ", sort " << sort.committed << "/"
            << sort.total << "; updates " << result.updates.committed << "/"
            << result.updates.attempted << " at "
            << format_ratio(result.updates.achieved_updates_per_second) << "/s\n";

  if (spec.retry_sweep_max_attempts >= 1) {
    std::string sweep = "attempts,sort_total,sort_committed,unsorted_clusters\n";
    for (uint32_t attempts = 1; attempts <= spec.retry_sweep_max_attempts; ++attempts) {
      TransactionManager sweep_tm;
      const auto sweep_table = build_experiment_table(spec, sweep_tm, globals);
      ClusteringConfig sweep_config = config;
      sweep_config.max_attempts_per_step = attempts;
      UpdateLoadOptions sweep_load = load;
      sweep_load.seed = globals.resolved_seed + attempts;
      const RobustnessResult r =
          run_clustering_with_updates(sweep_tm, *sweep_table, sweep_config, sweep_load);
      const StepSuccess s = step_success(r.report, StepKind::Sort);
      sweep += std::to_string(attempts) + "," + std::to_string(s.total) + "," +
               std::to_string(s.committed) + "," + std::to_string(s.total - s.committed) + "\n";
      std::cout << "retry sweep attempts=" << attempts << ": " << (s.total - s.committed)
                << " unsorted clusters\n";
    }
    write_text_file((std::filesystem::path(args.out_dir) / "retry_sweep.csv").string(), sweep);
  }
  std::cout << "reports -> " << args.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench-memory
// ---------------------------------------------------------------------------

int cmd_bench_memory(const BenchArgs& args, Globals& globals) {
  globals.resolve();
  const ExperimentSpec spec = parse_experiment_spec(read_text_file(args.spec_path));
  ensure_directory(args.out_dir);

  TransactionManager tm;
  const auto table = build_experiment_table(spec, tm, globals);
  ClusteringConfig config = parse_clustering_config(spec.clustering_text, table->schema());
  config.run_mode = spec.run_mode;
  config.memory_sample_interval_ms = spec.sample_interval_ms;

  const MemoryRunResult result = run_memory_experiment(tm, *table, config);
  const double peak_over_initial =
      result.initial_bytes == 0
          ? 0.0
          : static_cast<double>(result.peak_bytes) / result.initial_bytes;
  const double final_over_initial =
      result.initial_bytes == 0
          ? 0.0
          : static_cast<double>(result.final_bytes) / result.initial_bytes;

  write_metric_csv((std::filesystem::path(args.out_dir) / "memory.csv").string(),
                   {{"run_mode", run_mode_name(config.run_mode)},
                    {"initial_bytes", std::to_string(result.initial_bytes)},
                    {"peak_bytes", std::to_string(result.peak_bytes)},
                    {"final_bytes", std::to_string(result.final_bytes)},
                    {"peak_over_initial", format_ratio(peak_over_initial)},
                    {"final_over_initial", format_ratio(final_over_initial)}});
  export_clustering_report(result.report, args.out_dir);

  std::cout << "run_mode " << run_mode_name(config.run_mode) << ": initial "
            << result.initial_bytes << " bytes, peak " << result.peak_bytes << " ("
            << format_ratio(peak_over_initial) << "x), final " << result.final_bytes << " ("
            << format_ratio(final_over_initial) << "x) -> " << args.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string pairs_path;
  std::string measured_path;
  std::string estimated_path;
  std::string out_dir;
};

struct EvalPair {
  std::string op;
  std::string query_id;
  double measured = 0.0;
  double estimated = 0.0;
};

std::vector<EvalPair> read_evaluation_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream stream(text);
  std::string line;
  if (!std::getline(stream, line)) throw std::runtime_error("empty evaluation file: " + path);
  const std::vector<std::string> header = csv_split(line);
  const std::vector<std::string> expected = {"op", "query_id", "measured_ns", "estimated_ns",
                                             "relative_error"};
  if (header != expected) throw std::runtime_error("unexpected evaluation header in " + path);
  std::vector<EvalPair> rows;
  while (std::getline(stream, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = csv_split(line);
    if (fields.size() != expected.size()) {
      throw std::runtime_error("bad evaluation row in " + path + ": " + line);
    }
    if (fields[0] == "mse" || fields[0] == "smape") continue;  // summary rows
    rows.push_back({fields[0], fields[1], parse_double("measured_ns", fields[2]),
                    parse_double("estimated_ns", fields[3])});
  }
  return rows;
}

int cmd_report(const ReportArgs& args, Globals& globals) {
  globals.resolve();
  std::vector<EvalPair> rows;
  if (!args.pairs_path.empty()) {
    rows = read_evaluation_csv(args.pairs_path);
  } else {
    const auto measured = read_evaluation_csv(args.measured_path);
    const auto estimated = read_evaluation_csv(args.estimated_path);
    if (measured.size() != estimated.size()) {
      std::cerr << "error: length mismatch: " << measured.size() << " measured rows vs "
                << estimated.size() << " estimated rows\n";
      return 1;
    }
    for (size_t i = 0; i < measured.size(); ++i) {
      if (measured[i].op != estimated[i].op || measured[i].query_id != estimated[i].query_id) {
        std::cerr << "error: row " << i << " mismatch: " << measured[i].op << "/"
                  << measured[i].query_id << " vs " << estimated[i].op << "/"
                  << estimated[i].query_id << "\n";
        return 1;
      }
      rows.push_back({measured[i].op, measured[i].query_id, measured[i].measured,
                      estimated[i].estimated});
    }
  }
  ensure_directory(args.out_dir);

  // Ordered op groups, first appearance wins; "all" aggregates everything.
  std::vector<std::string> ops;
  std::map<std::string, std::vector<const EvalPair*>> by_op;
  for (const EvalPair& row : rows) {
    if (by_op.find(row.op) == by_op.end()) ops.push_back(row.op);
    by_op[row.op].push_back(&row);
  }

  std::string metrics = "op,count,mse,smape\n";
  std::string table_text;
  const auto emit_group = [&](const std::string& op, const std::vector<const EvalPair*>& group) {
    std::vector<double> measured, estimated;
    for (const EvalPair* row : group) {
      measured.push_back(row->measured);
      estimated.push_back(row->estimated);
    }
    const double group_mse = mse(measured, estimated);
    const double group_smape = smape(measured, estimated);
    char mse_text[64], smape_text[64];
    std::snprintf(mse_text, sizeof mse_text, "%.17g", group_mse);
    std::snprintf(smape_text, sizeof smape_text, "%.17g", group_smape);
    metrics += csv_join({op, std::to_string(group.size()), mse_text, smape_text}) + "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %8zu %16.4g %10.4f\n", op.c_str(), group.size(),
                  group_mse, group_smape);
    table_text += line;
  };
  for (const std::string& op : ops) emit_group(op, by_op[op]);
  std::vector<const EvalPair*> all;
  for (const EvalPair& row : rows) all.push_back(&row);
  if (!all.empty()) emit_group("all", all);
  write_text_file((std::filesystem::path(args.out_dir) / "metrics.csv").string(), metrics);

  // Relative-error histogram (measured/estimated), fixed 0.25-wide buckets up
  // to 2, one open bucket above, and one bucket for undefined ratios
  // (estimated <= 0). Bucket counts sum to the record count per op.
  const std::vector<double> edges = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::string histogram = "op,bucket_low,bucket_high,count\n";
  for (const std::string& op : ops) {
    std::vector<uint64_t> buckets(edges.size(), 0);  // last = [2, inf)
    uint64_t undefined = 0;
    for (const EvalPair* row : by_op[op]) {
      if (row->estimated <= 0) {
        ++undefined;
        continue;
      }
      const double ratio = row->measured / row->estimated;
      size_t bucket = edges.size() - 1;
      for (size_t i = 0; i + 1 < edges.size(); ++i) {
        if (ratio < edges[i + 1]) {
          bucket = i;
          break;
        }
      }
      ++buckets[bucket];
    }
    for (size_t i = 0; i < edges.size(); ++i) {
      const std::string low = format_ratio(edges[i]);
      const std::string high = i + 1 < edges.size() ? format_ratio(edges[i + 1]) : "inf";
      histogram += csv_join({op, low, high, std::to_string(buckets[i])}) + "\n";
    }
    histogram += csv_join({op, "undefined", "undefined", std::to_string(undefined)}) + "\n";
  }
  write_text_file((std::filesystem::path(args.out_dir) / "error_histogram.csv").string(),
                  histogram);

  std::cout << "op                      count              mse      smape\n" << table_text;
  std::cout << "reports -> " << args.out_dir << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"columnar re-clustering workbench"};
  app.require_subcommand(1);

  Globals globals;
  globals.seed_opt = app.add_option("--seed", globals.seed, "random seed (default 0)");
  globals.capacity_opt =
      app.add_option("--chunk-capacity", globals.chunk_capacity_flag,
                     "override the chunk capacity for generated and imported tables");
  app.add_option("--config", globals.config_path, "key=value defaults file (seed, chunk_capacity)")
      ->check(CLI::ExistingFile);

  int exit_code = 0;
  const auto guarded = [&exit_code](auto&& body) {
    try {
      exit_code = body();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit_code = 1;
    }
  };

  auto gen_args = std::make_shared<GenArgs>();
  CLI::App* gen = app.add_subcommand("gen", "generate synthetic table files from a JSON spec");
  gen->add_option("--spec", gen_args->spec_path, "generator spec (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--out-dir", gen_args->out_dir, "output directory (default .)");
  gen->callback([&, gen_args] { guarded([&] { return cmd_gen(*gen_args, globals); }); });

  auto run_args = std::make_shared<RunArgs>();
  CLI::App* run = app.add_subcommand("run", "execute a query file and export workload CSVs");
  run->add_option("--tables", run_args->table_paths, "table CSV files (name = file stem)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--queries", run_args->query_path, "query text file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--reps", run_args->repetitions, "repetitions per query (default 1)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--reorder", run_args->reorder, "reorder scan predicates by estimated selectivity");
  run->add_option("--out-dir", run_args->out_dir, "workload output directory")->required();
  run->callback([&, run_args] { guarded([&] { return cmd_run(*run_args, globals); }); });

  auto advise_args = std::make_shared<AdviseArgs>();
  CLI::App* advise =
      app.add_subcommand("advise", "rank clustering candidates for a recorded workload");
  advise->add_option("--workload", advise_args->workload_dir, "workload CSV directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  advise->add_option("--table", advise_args->table, "table to advise")->required();
  advise->add_option("-d,--dimensions", advise_args->dimensions,
                     "max clustering columns per candidate");
  advise->add_option("-k,--suggestions", advise_args->suggestions, "number of suggestions");
  advise->add_option("--hints", advise_args->hints_path, "correlation hints file")
      ->check(CLI::ExistingFile);
  advise->add_option("--model", advise_args->model_path, "cost-model options file")
      ->check(CLI::ExistingFile);
  advise->add_option("--out", advise_args->out_path, "suggestions CSV path");
  advise->add_option("--evaluation-out", advise_args->evaluation_path,
                     "per-operator identity-estimate CSV path");
  advise->callback([&, advise_args] { guarded([&] { return cmd_advise(*advise_args, globals); }); });

  auto apply_args = std::make_shared<ApplyArgs>();
  CLI::App* apply = app.add_subcommand("apply", "run clustering on a table file");
  apply->add_option("--table", apply_args->table_path, "table CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  apply->add_option("--clustering", apply_args->clustering_path, "clustering config file")
      ->required()
      ->check(CLI::ExistingFile);
  apply->add_option("--out-dir", apply_args->out_dir, "report output directory")->required();
  apply->add_option("--export", apply_args->export_path, "re-export the clustered table to this CSV");
  apply->callback([&, apply_args] { guarded([&] { return cmd_apply(*apply_args, globals); }); });

  auto robustness_args = std::make_shared<BenchArgs>();
  CLI::App* robustness = app.add_subcommand(
      "bench-robustness", "run clustering against a concurrent update load and report ratios");
  robustness->add_option("--spec", robustness_args->spec_path, "experiment spec (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  robustness->add_option("--out-dir", robustness_args->out_dir, "report output directory")
      ->required();
  robustness->callback(
      [&, robustness_args] { guarded([&] { return cmd_bench_robustness(*robustness_args, globals); }); });

  auto memory_args = std::make_shared<BenchArgs>();
  CLI::App* memory = app.add_subcommand(
      "bench-memory", "measure the memory footprint of one clustering run");
  memory->add_option("--spec", memory_args->spec_path, "experiment spec (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  memory->add_option("--out-dir", memory_args->out_dir, "report output directory")->required();
  memory->callback([&, memory_args] { guarded([&] { return cmd_bench_memory(*memory_args, globals); }); });

  auto report_args = std::make_shared<ReportArgs>();
  CLI::App* report = app.add_subcommand(
      "report", "estimate-quality metrics and error histograms from evaluation CSVs");
  auto* pairs_opt = report->add_option("--pairs", report_args->pairs_path,
                                       "evaluation CSV with measured and estimated columns")
                        ->check(CLI::ExistingFile);
  auto* measured_opt = report->add_option("--measured", report_args->measured_path,
                                          "evaluation CSV supplying measured values")
                           ->check(CLI::ExistingFile);
  report->add_option("--estimated", report_args->estimated_path,
                     "evaluation CSV supplying estimated values")
      ->check(CLI::ExistingFile)
      ->needs(measured_opt);
  measured_opt->excludes(pairs_opt);
  report->add_option("--out-dir", report_args->out_dir, "report output directory")->required();
  report->callback([&, report_args] {
    guarded([&] {
      if (report_args->pairs_path.empty() &&
          (report_args->measured_path.empty() || report_args->estimated_path.empty())) {
        std::cerr << "error: report needs --pairs or both --measured and --estimated\n";
        return 1;
      }
      return cmd_report(*report_args, globals);
    });
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
