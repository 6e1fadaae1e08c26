#include "strata/clustering.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "strata/csv.hpp"

namespace strata {

namespace {

using Clock = std::chrono::steady_clock;

uint64_t elapsed_ns(Clock::time_point since) {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

std::string cluster_key_name(const ClusterKey& key) {
  if (key.empty()) return "merge";
  std::string out;
  for (size_t i = 0; i < key.size(); ++i) {
    if (i > 0) out += '.';
    out += std::to_string(key[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

uint64_t parse_u64(const std::string& text, const std::string& key) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("clustering config: bad number '" + text + "' for " + key);
  }
}

void validate_config(const ClusteringConfig& config, const TableSchema& schema) {
  if (config.clustering_columns.empty()) {
    throw std::invalid_argument("clustering config: no clustering columns");
  }
  if (config.cluster_counts.size() != config.clustering_columns.size()) {
    throw std::invalid_argument(
        "clustering config: cluster_counts must match clustering_columns");
  }
  for (const uint32_t count : config.cluster_counts) {
    if (count < 1) throw std::invalid_argument("clustering config: cluster count below 1");
  }
  for (const ColumnId column : config.clustering_columns) {
    if (column >= schema.column_count()) {
      throw std::invalid_argument("clustering config: unknown clustering column id");
    }
  }
  if (config.sort_column >= schema.column_count()) {
    throw std::invalid_argument("clustering config: unknown sort column id");
  }
  if (config.histogram_bins < 1) {
    throw std::invalid_argument("clustering config: histogram_bins below 1");
  }
}

}  // namespace

bool ClusterRange::contains(const Value& v) const {
  if (low && value_less(v, *low)) return false;
  if (high && !value_less(v, *high)) return false;
  return true;
}

size_t ColumnBoundaries::assign(const Value& v) const {
  if (is_null(v)) {
    if (!has_null_range) {
      throw std::invalid_argument("null value on a clustering column without a null range");
    }
    return null_range_index();
  }
  for (size_t j = 0; j < ranges.size(); ++j) {
    if (ranges[j].contains(v)) return j;
  }
  // Below the first range's lower bound: the value arrived after boundaries
  // were derived; keep assignment total by using the first range.
  return 0;
}

const char* run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Sequential:
      return "sequential";
    case RunMode::BackgroundCleanup:
      return "background_cleanup";
    case RunMode::BackgroundCleanupAndEncoding:
      return "background_cleanup_and_encoding";
  }
  return "sequential";
}

std::optional<RunMode> run_mode_from_name(const std::string& name) {
  if (name == "sequential") return RunMode::Sequential;
  if (name == "background_cleanup") return RunMode::BackgroundCleanup;
  if (name == "background_cleanup_and_encoding") return RunMode::BackgroundCleanupAndEncoding;
  return std::nullopt;
}

const char* step_kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::Partition:
      return "partition";
    case StepKind::Merge:
      return "merge";
    case StepKind::Sort:
      return "sort";
  }
  return "partition";
}

const char* step_outcome_name(StepOutcome outcome) {
  return outcome == StepOutcome::Committed ? "committed" : "aborted";
}

uint64_t ClusteringRunReport::committed_steps() const {
  uint64_t n = 0;
  for (const auto& step : steps) n += step.outcome == StepOutcome::Committed;
  return n;
}

uint64_t ClusteringRunReport::aborted_steps() const {
  uint64_t n = 0;
  for (const auto& step : steps) n += step.outcome == StepOutcome::Aborted;
  return n;
}

void export_clustering_report(const ClusteringRunReport& report, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  {
    std::ofstream out(fs::path(directory) / "steps.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write steps.csv");
    out << "step,kind,target,outcome,attempts,rows_moved,lock_held_ns,duration_ns\n";
    for (size_t i = 0; i < report.steps.size(); ++i) {
      const auto& s = report.steps[i];
      out << i << ',' << step_kind_name(s.kind) << ',' << csv_escape(s.target) << ','
          << step_outcome_name(s.outcome) << ',' << s.attempts << ',' << s.rows_moved << ','
          << s.lock_held_ns << ',' << s.duration_ns << '\n';
    }
  }
  {
    std::ofstream out(fs::path(directory) / "memory_samples.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write memory_samples.csv");
    out << "elapsed_ms,bytes\n";
    for (const auto& sample : report.memory_samples) {
      out << sample.elapsed_ms << ',' << sample.bytes << '\n';
    }
  }
}

std::string format_clustering_config(const ClusteringConfig& config,
                                     const TableSchema& schema) {
  std::ostringstream out;
  out << "clustering_columns = ";
  for (size_t i = 0; i < config.clustering_columns.size(); ++i) {
    if (i > 0) out << ", ";
    out << schema.column(config.clustering_columns[i]).name;
  }
  out << "\ncluster_counts = ";
  for (size_t i = 0; i < config.cluster_counts.size(); ++i) {
    if (i > 0) out << ", ";
    out << config.cluster_counts[i];
  }
  out << "\nsort_column = " << schema.column(config.sort_column).name;
  out << "\nmerge_row_threshold = " << config.merge_row_threshold;
  out << "\nmax_attempts_per_step = " << config.max_attempts_per_step;
  out << "\nrun_mode = " << run_mode_name(config.run_mode);
  out << "\nhistogram_bins = " << config.histogram_bins;
  out << "\nbackground_cleanup_interval_ms = " << config.background_cleanup_interval_ms;
  out << "\nmemory_sample_interval_ms = " << config.memory_sample_interval_ms;
  out << '\n';
  return out.str();
}

ClusteringConfig parse_clustering_config(const std::string& text, const TableSchema& schema) {
  ClusteringConfig config;
  bool saw_columns = false;
  bool saw_counts = false;
  bool saw_sort = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("clustering config: expected 'key = value', got '" + line +
                                  "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "clustering_columns") {
      for (const auto& name : split_list(value)) {
        const auto id = schema.find_column(name);
        if (!id) {
          throw std::invalid_argument("clustering config: unknown column '" + name + "'");
        }
        config.clustering_columns.push_back(*id);
      }
      saw_columns = true;
    } else if (key == "cluster_counts") {
      for (const auto& item : split_list(value)) {
        config.cluster_counts.push_back(static_cast<uint32_t>(parse_u64(item, key)));
      }
      saw_counts = true;
    } else if (key == "sort_column") {
      const auto id = schema.find_column(value);
      if (!id) {
        throw std::invalid_argument("clustering config: unknown column '" + value + "'");
      }
      config.sort_column = *id;
      saw_sort = true;
    } else if (key == "merge_row_threshold") {
      config.merge_row_threshold = parse_u64(value, key);
    } else if (key == "max_attempts_per_step") {
      config.max_attempts_per_step = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "run_mode") {
      const auto mode = run_mode_from_name(value);
      if (!mode) throw std::invalid_argument("clustering config: unknown run mode '" + value + "'");
      config.run_mode = *mode;
    } else if (key == "histogram_bins") {
      config.histogram_bins = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "background_cleanup_interval_ms") {
      config.background_cleanup_interval_ms = parse_u64(value, key);
    } else if (key == "memory_sample_interval_ms") {
      config.memory_sample_interval_ms = parse_u64(value, key);
    } else {
      throw std::invalid_argument("clustering config: unknown key '" + key + "'");
    }
  }
  if (!saw_columns || !saw_counts || !saw_sort) {
    throw std::invalid_argument(
        "clustering config: clustering_columns, cluster_counts, and sort_column are required");
  }
  validate_config(config, schema);
  return config;
}

ClusterBoundaries choose_boundaries(const std::vector<Histogram>& histograms,
                                    const std::vector<uint32_t>& cluster_counts,
                                    const std::vector<bool>& nullable) {
  if (histograms.size() != cluster_counts.size() || histograms.size() != nullable.size()) {
    throw std::invalid_argument("choose_boundaries: argument sizes differ");
  }
  ClusterBoundaries out;
  for (size_t i = 0; i < histograms.size(); ++i) {
    const Histogram& h = histograms[i];
    if (cluster_counts[i] < 1) throw std::invalid_argument("cluster count below 1");
    if (h.bins.empty()) throw std::invalid_argument("empty histogram");
    const double ideal = static_cast<double>(h.total_rows) / cluster_counts[i];

    // Greedy aggregation: grow the open cluster while it stays below the
    // ideal size; a bin that would overshoot joins only when the overshoot
    // is smaller than the undershoot, and a bin that fills (or exceeds) the
    // ideal on its own closes immediately as its own cluster.
    std::vector<size_t> starts;
    double size = 0.0;
    size_t b = 0;
    while (b < h.bins.size()) {
      const double rows = static_cast<double>(h.bins[b].row_count);
      if (size == 0.0) {
        starts.push_back(b);
        size = rows;
        ++b;
        if (size >= ideal) size = 0.0;
        continue;
      }
      if (size + rows < ideal) {
        size += rows;
        ++b;
        continue;
      }
      const double overshoot = size + rows - ideal;
      const double undershoot = ideal - size;
      if (overshoot < undershoot) ++b;
      size = 0.0;
    }

    ColumnBoundaries cb;
    cb.column = h.column;
    cb.has_null_range = nullable[i];
    for (size_t j = 0; j < starts.size(); ++j) {
      ClusterRange range;
      range.low = h.bins[starts[j]].lower;
      if (j + 1 < starts.size()) range.high = h.bins[starts[j + 1]].lower;
      cb.ranges.push_back(std::move(range));
    }
    out.columns.push_back(std::move(cb));
  }
  return out;
}

ClusterKey assign_cluster(const std::vector<Value>& values,
                          const ClusterBoundaries& boundaries) {
  if (values.size() != boundaries.columns.size()) {
    throw std::invalid_argument("assign_cluster: one value per clustering column expected");
  }
  ClusterKey key(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    key[i] = boundaries.columns[i].assign(values[i]);
  }
  return key;
}

Clusterer::Clusterer(TransactionManager& tm, Table& table, ClusteringConfig config)
    : tm_(tm), table_(table), config_(std::move(config)) {
  validate_config(config_, table_.schema());
}

const ClusterBoundaries& Clusterer::compute_boundaries() {
  std::vector<Histogram> histograms;
  std::vector<uint32_t> counts;
  std::vector<bool> nullable;
  for (size_t i = 0; i < config_.clustering_columns.size(); ++i) {
    const ColumnId column = config_.clustering_columns[i];
    histograms.push_back(build_histogram(table_, column, config_.histogram_bins));
    counts.push_back(config_.cluster_counts[i]);
    nullable.push_back(table_.schema().column(column).nullable);
  }
  boundaries_ = choose_boundaries(histograms, counts, nullable);
  return *boundaries_;
}

const ClusterBoundaries& Clusterer::boundaries() const {
  if (!boundaries_) throw std::logic_error("boundaries not computed yet");
  return *boundaries_;
}

std::map<ClusterKey, std::vector<ChunkId>> Clusterer::cluster_chunks() const {
  std::map<ClusterKey, std::vector<ChunkId>> out;
  for (const auto& [key, state] : clusters_) out[key] = live_chunks(state);
  return out;
}

std::vector<ChunkId> Clusterer::live_chunks(const ClusterState& state) const {
  std::vector<ChunkId> out;
  for (const ChunkId id : state.chunks) {
    const auto chunk = table_.chunk(id);
    if (!chunk) continue;
    if (chunk->mvcc().cleanup_commit_id.load(std::memory_order_acquire) != kUnsetCid) continue;
    out.push_back(id);
  }
  return out;
}

std::vector<ValueRangeConstraint> Clusterer::constraints_for(const ClusterKey& key) const {
  std::vector<ValueRangeConstraint> out;
  if (key.empty()) return out;  // merge cluster: unconstrained
  const auto& bounds = boundaries();
  for (size_t i = 0; i < key.size(); ++i) {
    const auto& cb = bounds.columns[i];
    ValueRangeConstraint constraint;
    constraint.column = cb.column;
    if (cb.has_null_range && key[i] == cb.null_range_index()) {
      constraint.null_only = true;
    } else {
      const auto& range = cb.ranges.at(key[i]);
      // The first range absorbs later-arriving values below the observed
      // minimum, so its recorded constraint is unbounded below.
      if (key[i] > 0) constraint.low = range.low;
      constraint.high = range.high;
    }
    out.push_back(std::move(constraint));
  }
  return out;
}

Clusterer::ClusterState& Clusterer::cluster_for(const ClusterKey& key) {
  auto [it, inserted] = clusters_.try_emplace(key);
  if (inserted) it->second.constraints = constraints_for(key);
  return it->second;
}

void Clusterer::append_cluster_rows(ClusterState& state,
                                    const std::vector<std::vector<Value>>& rows,
                                    CommitId begin_cid) {
  size_t next = 0;
  while (next < rows.size()) {
    if (state.insertion == kInvalidChunkId) {
      {
        std::lock_guard<std::mutex> guard(table_.append_lock());
        state.insertion = table_.append_mutable_chunk_locked(/*use_for_inserts=*/false);
        state.chunks.push_back(state.insertion);
      }
      // The chunk is still empty, so constraints land before any row does.
      table_.chunk(state.insertion)->set_value_range_constraints(state.constraints);
    }
    auto target = table_.chunk(state.insertion);
    const auto wanted = static_cast<uint32_t>(
        std::min<size_t>(rows.size() - next, target->capacity()));
    const uint32_t appended =
        target->append_rows(wanted, [&](ChunkOffset slot, uint32_t row) {
          const auto& values = rows[next + row];
          for (size_t c = 0; c < values.size(); ++c) {
            target->write_value(static_cast<ColumnId>(c), slot, values[c]);
          }
          auto& meta = target->row_meta(slot);
          meta.begin_cid.store(begin_cid, std::memory_order_release);
          meta.end_cid.store(kUnsetCid, std::memory_order_release);
          meta.tid.store(0, std::memory_order_release);
        });
    next += appended;
    if (appended < wanted || target->size() == target->capacity()) {
      target->finalize();
      state.insertion = kInvalidChunkId;
    }
  }
}

void Clusterer::finalize_insertion_chunks() {
  for (auto& [key, state] : clusters_) {
    if (state.insertion == kInvalidChunkId) continue;
    table_.chunk(state.insertion)->finalize();
    state.insertion = kInvalidChunkId;
  }
}

StepReport Clusterer::partition_step(ChunkId chunk_id) {
  return move_chunk_step(chunk_id, /*to_merge_cluster=*/false);
}

StepReport Clusterer::move_chunk_step(ChunkId chunk_id, bool to_merge_cluster) {
  const auto step_start = Clock::now();
  StepReport step;
  step.kind = to_merge_cluster ? StepKind::Merge : StepKind::Partition;
  step.target = "chunk:" + std::to_string(chunk_id);

  const auto chunk = table_.chunk(chunk_id);
  if (!chunk || chunk->is_mutable()) {
    throw std::invalid_argument("cannot move rows of a missing or mutable chunk");
  }
  const auto& bounds = boundaries();

  auto ctx = tm_.begin_transaction();
  std::optional<Clock::time_point> first_lock;
  std::vector<ChunkOffset> owned;
  const uint32_t rows = chunk->size();
  for (ChunkOffset offset = 0; offset < rows; ++offset) {
    const auto& meta = chunk->row_meta(offset);
    if (meta.end_cid.load(std::memory_order_acquire) != kUnsetCid) continue;  // already dead
    const RowLocation loc{&table_, chunk_id, offset};
    if (!tm_.try_lock_row(*ctx, loc)) {
      tm_.abort(*ctx);
      step.outcome = StepOutcome::Aborted;
      if (first_lock) step.lock_held_ns = elapsed_ns(*first_lock);
      step.duration_ns = elapsed_ns(step_start);
      return step;
    }
    if (!first_lock) first_lock = Clock::now();
    owned.push_back(offset);
  }

  // Values are immutable once published, so rows can be materialized and
  // assigned to clusters before entering the commit critical section.
  const size_t column_count = table_.schema().column_count();
  std::vector<std::shared_ptr<const Segment>> segments(column_count);
  for (size_t c = 0; c < column_count; ++c) {
    segments[c] = chunk->segment(static_cast<ColumnId>(c));
  }
  std::map<ClusterKey, std::vector<std::vector<Value>>> batches;
  std::vector<Value> clustering_values(config_.clustering_columns.size());
  for (const ChunkOffset offset : owned) {
    std::vector<Value> row(column_count);
    for (size_t c = 0; c < column_count; ++c) row[c] = segments[c]->value_at(offset);
    ClusterKey key;
    if (!to_merge_cluster) {
      for (size_t i = 0; i < config_.clustering_columns.size(); ++i) {
        clustering_values[i] = row[config_.clustering_columns[i]];
      }
      key = assign_cluster(clustering_values, bounds);
    }
    batches[key].push_back(std::move(row));
    tm_.invalidate_row(*ctx, RowLocation{&table_, chunk_id, offset});
  }

  tm_.commit(*ctx, [&](CommitId cid) {
    for (auto& [key, batch] : batches) append_cluster_rows(cluster_for(key), batch, cid);
    if (chunk->mvcc().cleanup_commit_id.load(std::memory_order_acquire) == kUnsetCid) {
      TransactionManager::mark_chunk_cleanup(*chunk, cid);
    }
  });

  step.rows_moved = owned.size();
  if (first_lock) step.lock_held_ns = elapsed_ns(*first_lock);
  step.duration_ns = elapsed_ns(step_start);
  return step;
}

StepReport Clusterer::sort_cluster(const ClusterKey& key) {
  const auto step_start = Clock::now();
  StepReport step;
  step.kind = StepKind::Sort;
  step.target = "cluster:" + cluster_key_name(key);

  const auto it = clusters_.find(key);
  if (it == clusters_.end()) throw std::invalid_argument("unknown cluster");
  ClusterState& state = it->second;
  const auto chunk_ids = live_chunks(state);
  if (chunk_ids.empty()) {
    step.duration_ns = elapsed_ns(step_start);
    return step;
  }

  std::vector<std::shared_ptr<Chunk>> chunks;
  std::vector<uint64_t> invalid_counters;
  for (const ChunkId id : chunk_ids) {
    auto chunk = table_.chunk(id);
    if (chunk->is_mutable()) throw std::logic_error("sort over a mutable cluster chunk");
    invalid_counters.push_back(chunk->mvcc().invalid_row_count.load(std::memory_order_acquire));
    chunks.push_back(std::move(chunk));
  }

  auto ctx = tm_.begin_transaction();

  // Materialize the cluster's visible rows, then sort stably so rows with
  // equal sort keys keep their partition order.
  struct Rec {
    RowLocation loc;
    std::vector<Value> values;
  };
  const size_t column_count = table_.schema().column_count();
  std::vector<Rec> records;
  for (size_t i = 0; i < chunks.size(); ++i) {
    const auto& chunk = chunks[i];
    std::vector<std::shared_ptr<const Segment>> segments(column_count);
    for (size_t c = 0; c < column_count; ++c) {
      segments[c] = chunk->segment(static_cast<ColumnId>(c));
    }
    const uint32_t rows = chunk->size();
    for (ChunkOffset offset = 0; offset < rows; ++offset) {
      const RowLocation loc{&table_, chunk_ids[i], offset};
      if (!ctx->sees(chunk->row_meta(offset), loc)) continue;
      Rec rec;
      rec.loc = loc;
      rec.values.resize(column_count);
      for (size_t c = 0; c < column_count; ++c) rec.values[c] = segments[c]->value_at(offset);
      records.push_back(std::move(rec));
    }
  }
  const ColumnId sort_column = config_.sort_column;
  std::stable_sort(records.begin(), records.end(), [&](const Rec& a, const Rec& b) {
    return value_less(a.values[sort_column], b.values[sort_column]);
  });

  // Lock every row the sorted output is built from; any conflict (or any
  // invalidation committed since the counters were read) voids the result.
  std::optional<Clock::time_point> first_lock;
  auto abort_step = [&]() {
    tm_.abort(*ctx);
    step.outcome = StepOutcome::Aborted;
    if (first_lock) step.lock_held_ns = elapsed_ns(*first_lock);
    step.duration_ns = elapsed_ns(step_start);
    return step;
  };
  for (const auto& rec : records) {
    if (!tm_.try_lock_row(*ctx, rec.loc)) return abort_step();
    if (!first_lock) first_lock = Clock::now();
  }
  for (size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i]->mvcc().invalid_row_count.load(std::memory_order_acquire) >
        invalid_counters[i]) {
      return abort_step();
    }
  }

  for (const auto& rec : records) tm_.invalidate_row(*ctx, rec.loc);

  tm_.commit(*ctx, [&](CommitId cid) {
    std::vector<ChunkId> fresh;
    size_t next = 0;
    while (next < records.size()) {
      ChunkId id;
      {
        std::lock_guard<std::mutex> guard(table_.append_lock());
        id = table_.append_mutable_chunk_locked(/*use_for_inserts=*/false);
      }
      auto target = table_.chunk(id);
      target->set_value_range_constraints(state.constraints);
      const auto wanted = static_cast<uint32_t>(
          std::min<size_t>(records.size() - next, target->capacity()));
      const uint32_t appended =
          target->append_rows(wanted, [&](ChunkOffset slot, uint32_t row) {
            const auto& values = records[next + row].values;
            for (size_t c = 0; c < column_count; ++c) {
              target->write_value(static_cast<ColumnId>(c), slot, values[c]);
            }
            auto& meta = target->row_meta(slot);
            meta.begin_cid.store(cid, std::memory_order_release);
            meta.end_cid.store(kUnsetCid, std::memory_order_release);
            meta.tid.store(0, std::memory_order_release);
          });
      next += appended;
      target->finalize();
      target->set_sort_column(sort_column);
      target->encode();
      fresh.push_back(id);
    }
    for (const auto& chunk : chunks) {
      if (chunk->mvcc().cleanup_commit_id.load(std::memory_order_acquire) == kUnsetCid) {
        TransactionManager::mark_chunk_cleanup(*chunk, cid);
      }
    }
    state.chunks = std::move(fresh);
    state.insertion = kInvalidChunkId;
  });

  step.rows_moved = records.size();
  if (first_lock) step.lock_held_ns = elapsed_ns(*first_lock);
  step.duration_ns = elapsed_ns(step_start);
  return step;
}

StepReport Clusterer::run_step_with_retries(const std::function<StepReport()>& step) {
  const uint32_t max_attempts = std::max<uint32_t>(1, config_.max_attempts_per_step);
  StepReport last;
  for (uint32_t attempt = 1; attempt <= max_attempts; ++attempt) {
    last = step();
    last.attempts = attempt;
    if (last.outcome == StepOutcome::Committed) break;
  }
  return last;
}

ClusteringRunReport Clusterer::run() {
  ClusteringRunReport report;
  const auto run_start = Clock::now();

  // Partition targets: the immutable, not-yet-retired chunks present now.
  std::vector<ChunkId> targets;
  const ChunkId preexisting = table_.chunk_count();
  for (ChunkId id = 0; id < preexisting; ++id) {
    const auto chunk = table_.chunk(id);
    if (!chunk || chunk->is_mutable()) continue;
    if (chunk->mvcc().cleanup_commit_id.load(std::memory_order_acquire) != kUnsetCid) continue;
    targets.push_back(id);
  }
  if (targets.empty()) {
    throw std::invalid_argument("clustering requires at least one finalized chunk");
  }

  // Background workers: periodic deleter, opportunistic encoder, memory
  // sampler. All poll a shared stop flag in small sleep slices.
  std::atomic<bool> stop{false};
  std::atomic<uint64_t> deleted{0};
  std::vector<std::thread> workers;
  const auto sleep_until_or_stop = [&stop](uint64_t interval_ms) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(interval_ms);
    while (!stop.load(std::memory_order_acquire) && Clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  };
  if (config_.run_mode != RunMode::Sequential) {
    workers.emplace_back([&] {
      while (!stop.load(std::memory_order_acquire)) {
        sleep_until_or_stop(config_.background_cleanup_interval_ms);
        if (stop.load(std::memory_order_acquire)) break;
        deleted.fetch_add(tm_.run_cleanup(table_), std::memory_order_relaxed);
      }
    });
  }
  if (config_.run_mode == RunMode::BackgroundCleanupAndEncoding) {
    workers.emplace_back([&, preexisting] {
      while (!stop.load(std::memory_order_acquire)) {
        const ChunkId limit = table_.chunk_count();
        for (ChunkId id = preexisting; id < limit; ++id) {
          const auto chunk = table_.chunk(id);
          if (!chunk || chunk->is_mutable() || chunk->is_encoded()) continue;
          if (chunk->mvcc().cleanup_commit_id.load(std::memory_order_acquire) != kUnsetCid) {
            continue;
          }
          chunk->encode();
        }
        sleep_until_or_stop(10);
      }
    });
  }
  std::mutex sample_mutex;
  std::vector<MemorySample> samples;
  const auto take_sample = [&] {
    MemorySample sample;
    sample.elapsed_ms = static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                  Clock::now() - run_start)
                                                  .count());
    sample.bytes = table_.estimate_memory();
    std::lock_guard<std::mutex> guard(sample_mutex);
    samples.push_back(sample);
  };
  if (config_.memory_sample_interval_ms > 0) {
    workers.emplace_back([&] {
      while (!stop.load(std::memory_order_acquire)) {
        take_sample();
        sleep_until_or_stop(config_.memory_sample_interval_ms);
      }
    });
  }

  // Phase 1: cluster boundaries from the current live rows.
  auto phase_start = Clock::now();
  compute_boundaries();
  report.boundary_ns = elapsed_ns(phase_start);

  // Phase 2: move every target chunk's rows into its clusters.
  phase_start = Clock::now();
  for (const ChunkId id : targets) {
    report.steps.push_back(run_step_with_retries([&] { return partition_step(id); }));
  }
  report.partition_ns = elapsed_ns(phase_start);

  // Phase 3: sweep small cluster chunks into the merge cluster.
  phase_start = Clock::now();
  if (config_.merge_row_threshold > 0) {
    finalize_insertion_chunks();
    std::vector<ChunkId> small;
    for (const auto& [key, state] : clusters_) {
      if (key.empty()) continue;  // never merge the merge cluster into itself
      for (const ChunkId id : live_chunks(state)) {
        if (table_.chunk(id)->size() <= config_.merge_row_threshold) small.push_back(id);
      }
    }
    for (const ChunkId id : small) {
      auto step = run_step_with_retries([&] { return move_chunk_step(id, true); });
      if (step.outcome == StepOutcome::Committed) {
        ++report.merged_chunks;
        report.merged_rows += step.rows_moved;
      }
      report.steps.push_back(std::move(step));
    }
  }
  report.merge_ns = elapsed_ns(phase_start);

  // Phase 4: sort every cluster (merge cluster included) into encoded chunks.
  phase_start = Clock::now();
  finalize_insertion_chunks();
  std::vector<ClusterKey> keys;
  for (const auto& [key, state] : clusters_) keys.push_back(key);
  for (const auto& key : keys) {
    if (live_chunks(clusters_.at(key)).empty()) continue;
    report.steps.push_back(run_step_with_retries([&] { return sort_cluster(key); }));
  }
  report.sort_ns = elapsed_ns(phase_start);

  // Phase 5: physically drop retired chunks no active snapshot can reach.
  phase_start = Clock::now();
  report.chunks_deleted = tm_.run_cleanup(table_);
  report.cleanup_ns = elapsed_ns(phase_start);

  stop.store(true, std::memory_order_release);
  for (auto& worker : workers) worker.join();
  report.chunks_deleted += deleted.load(std::memory_order_acquire);
  if (config_.memory_sample_interval_ms > 0) take_sample();
  report.memory_samples = std::move(samples);
  return report;
}

}  // namespace strata
