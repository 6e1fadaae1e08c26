#include "strata/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <latch>
#include <random>
#include <stdexcept>
#include <thread>

namespace strata {

namespace {

using Clock = std::chrono::steady_clock;

struct UpdaterStats {
  uint64_t attempted = 0;
  uint64_t committed = 0;
  uint64_t conflicts = 0;
  std::vector<std::pair<std::vector<Value>, std::vector<Value>>> updates;
};

struct VisibleRow {
  std::shared_ptr<Chunk> chunk;
  RowLocation loc;
};

/// Probes uniformly random slots for a row visible to `ctx`.
std::optional<VisibleRow> probe_visible_row(TransactionContext& ctx, Table& table,
                                            std::mt19937_64& engine, int probes) {
  for (int i = 0; i < probes; ++i) {
    const ChunkId chunk_count = table.chunk_count();
    if (chunk_count == 0) return std::nullopt;
    const ChunkId chunk_id = static_cast<ChunkId>(engine() % chunk_count);
    const auto chunk = table.chunk(chunk_id);
    if (!chunk) continue;
    const uint32_t rows = chunk->size();
    if (rows == 0) continue;
    const ChunkOffset offset = static_cast<ChunkOffset>(engine() % rows);
    const RowLocation loc{&table, chunk_id, offset};
    if (ctx.sees(chunk->row_meta(offset), loc)) return VisibleRow{chunk, loc};
  }
  return std::nullopt;
}

std::vector<Value> read_row(const Chunk& chunk, ChunkOffset offset, size_t column_count) {
  std::vector<Value> row(column_count);
  for (ColumnId col = 0; col < column_count; ++col) {
    row[col] = chunk.segment(col)->value_at(offset);
  }
  return row;
}

Value modified_payload(const Value& old_value, DataType type, std::mt19937_64& engine) {
  switch (type) {
    case DataType::Int64:
      return std::get<int64_t>(old_value) + static_cast<int64_t>(engine() % 1000) + 1;
    case DataType::Float64:
      return std::get<double>(old_value) + 1.0;
    case DataType::String:
    case DataType::Date:
      return old_value;  // a reinserted version with unchanged content is still an update
  }
  return old_value;
}

void updater_loop(TransactionManager& tm, Table& table, const UpdateLoadOptions& options,
                  ColumnId modify_column, bool draw_donor_value, uint32_t thread_index,
                  std::latch& start, const std::atomic<bool>& stop, Clock::time_point deadline,
                  UpdaterStats& stats) {
  std::mt19937_64 engine(options.seed * 0x9e3779b97f4a7c15ull + thread_index + 1);
  const double per_thread_rate = options.updates_per_second / options.threads;
  const auto interval = std::chrono::nanoseconds(
      per_thread_rate > 0 ? static_cast<uint64_t>(1e9 / per_thread_rate) : 0);
  const size_t column_count = table.schema().column_count();
  const DataType column_type = table.schema().column(modify_column).type;

  start.arrive_and_wait();
  auto next = Clock::now();
  while (!stop.load(std::memory_order_relaxed) && Clock::now() < deadline) {
    next += interval;
    const auto now = Clock::now();
    if (next > now) {
      std::this_thread::sleep_until(std::min(next, deadline));
      if (stop.load(std::memory_order_relaxed)) break;
    } else {
      next = now;  // behind schedule: don't accumulate debt
    }

    const auto ctx = tm.begin_transaction();
    const auto target = probe_visible_row(*ctx, table, engine, 8);
    if (!target) {
      tm.abort(*ctx);
      continue;
    }
    ++stats.attempted;
    if (!tm.try_lock_row(*ctx, target->loc)) {
      ++stats.conflicts;
      tm.abort(*ctx);
      continue;
    }
    std::vector<Value> old_row = read_row(*target->chunk, target->loc.offset, column_count);
    std::vector<Value> new_row = old_row;
    if (draw_donor_value) {
      // Replace the clustering value with another visible row's value so the
      // mutation stays inside the data distribution but crosses boundaries.
      if (const auto donor = probe_visible_row(*ctx, table, engine, 5)) {
        new_row[modify_column] = donor->chunk->segment(modify_column)->value_at(donor->loc.offset);
      }
    } else {
      new_row[modify_column] = modified_payload(old_row[modify_column], column_type, engine);
    }
    if (!tm.invalidate_row(*ctx, target->loc)) {
      tm.abort(*ctx);
      ++stats.conflicts;
      continue;
    }
    tm.insert_rows(*ctx, table, {new_row});
    tm.commit(*ctx);
    ++stats.committed;
    if (options.record_updates) {
      stats.updates.emplace_back(std::move(old_row), std::move(new_row));
    }
  }
}

}  // namespace

StepSuccess step_success(const ClusteringRunReport& report, StepKind kind) {
  StepSuccess out;
  for (const StepReport& step : report.steps) {
    if (step.kind != kind) continue;
    ++out.total;
    if (step.outcome == StepOutcome::Committed) ++out.committed;
  }
  return out;
}

RobustnessResult run_clustering_with_updates(TransactionManager& tm, Table& table,
                                             const ClusteringConfig& config,
                                             const UpdateLoadOptions& options) {
  const TableSchema& schema = table.schema();
  ColumnId payload_column = kInvalidColumnId;
  for (ColumnId col = 0; col < schema.column_count(); ++col) {
    const bool clustering =
        std::find(config.clustering_columns.begin(), config.clustering_columns.end(), col) !=
        config.clustering_columns.end();
    if (!clustering && col != config.sort_column) {
      payload_column = col;
      break;
    }
  }
  ColumnId modify_column = payload_column;
  bool draw_donor_value = false;
  if (options.mutate_clustering_column && !config.clustering_columns.empty()) {
    modify_column = config.clustering_columns.front();
    draw_donor_value = true;
  }

  const bool run_updates = options.threads > 0 && options.updates_per_second > 0;
  if (run_updates && modify_column == kInvalidColumnId) {
    throw std::invalid_argument("update load needs a column outside the clustering key");
  }

  const uint32_t threads = run_updates ? options.threads : 0;
  std::vector<UpdaterStats> stats(threads);
  std::vector<std::thread> workers;
  std::latch start(threads + 1);
  std::atomic<bool> stop{false};
  const auto deadline = Clock::now() + std::chrono::milliseconds(options.max_duration_ms);

  for (uint32_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      updater_loop(tm, table, options, modify_column, draw_donor_value, t, start, stop, deadline,
                   stats[t]);
    });
  }

  RobustnessResult result;
  const auto begin = Clock::now();
  start.arrive_and_wait();
  std::exception_ptr failure;
  try {
    Clusterer clusterer(tm, table, config);
    result.report = clusterer.run();
  } catch (...) {
    failure = std::current_exception();
  }
  stop.store(true, std::memory_order_relaxed);
  for (std::thread& worker : workers) worker.join();
  const auto end = Clock::now();
  if (failure) std::rethrow_exception(failure);

  UpdateLoadResult& load = result.updates;
  load.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(end - begin).count();
  for (UpdaterStats& s : stats) {
    load.attempted += s.attempted;
    load.committed += s.committed;
    load.conflicts += s.conflicts;
    for (auto& update : s.updates) load.updates.push_back(std::move(update));
  }
  const double wall_seconds = static_cast<double>(load.wall_ms) / 1000.0;
  load.achieved_updates_per_second = wall_seconds > 0 ? load.committed / wall_seconds : 0.0;
  return result;
}

MemoryRunResult run_memory_experiment(TransactionManager& tm, Table& table,
                                      ClusteringConfig config) {
  for (ChunkId id = 0; id < table.chunk_count(); ++id) {
    const auto chunk = table.chunk(id);
    if (!chunk || chunk->size() == 0) continue;
    chunk->finalize();
    chunk->encode();
  }
  if (config.memory_sample_interval_ms == 0) config.memory_sample_interval_ms = 2;

  MemoryRunResult result;
  result.initial_bytes = table.estimate_memory();
  Clusterer clusterer(tm, table, config);
  result.report = clusterer.run();
  result.final_bytes = table.estimate_memory();
  result.peak_bytes = std::max(result.initial_bytes, result.final_bytes);
  for (const MemorySample& sample : result.report.memory_samples) {
    result.peak_bytes = std::max(result.peak_bytes, sample.bytes);
  }
  return result;
}

}  // namespace strata
