#include "strata/exec.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace strata {

namespace {

using Clock = std::chrono::steady_clock;

uint64_t elapsed_ns(Clock::time_point start) {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

DataType value_data_type(const Value& v, DataType column_type) {
  switch (v.index()) {
    case 1:
      return DataType::Int64;
    case 2:
      return DataType::Float64;
    case 3:
      // Date columns carry their values as strings.
      return column_type == DataType::Date ? DataType::Date : DataType::String;
    default:
      throw std::invalid_argument("predicate operand must not be NULL");
  }
}

void check_operand_types(const PredicateSpec& predicate, const TableSchema& schema) {
  const DataType column_type = schema.column(predicate.column).type;
  if (value_data_type(predicate.value, column_type) != column_type) {
    throw std::invalid_argument("predicate operand type does not match column type");
  }
  if (predicate.comparator == Comparator::Between &&
      value_data_type(predicate.second_value, column_type) != column_type) {
    throw std::invalid_argument("between upper bound type does not match column type");
  }
  if ((predicate.comparator == Comparator::LikePrefix ||
       predicate.comparator == Comparator::LikeInfix) &&
      !is_string_type(column_type)) {
    throw std::invalid_argument("LIKE requires a string column");
  }
}

// Iterates the selected rows of one chunk, dense or sparse.
template <typename Fn>
void for_each_selected(const ChunkSelection& cs, Fn&& fn) {
  if (cs.dense) {
    for (ChunkOffset offset = 0; offset < cs.dense_size; ++offset) fn(offset);
  } else {
    for (const ChunkOffset offset : cs.offsets) fn(offset);
  }
}

}  // namespace

const char* join_mode_name(JoinMode mode) {
  return mode == JoinMode::Inner ? "inner" : "semi";
}

std::optional<JoinMode> join_mode_from_name(const std::string& name) {
  if (name == "inner") return JoinMode::Inner;
  if (name == "semi") return JoinMode::Semi;
  return std::nullopt;
}

RowSelection Executor::get_table(const TransactionContext& ctx, Table& table) const {
  RowSelection out;
  out.table = &table;
  const auto chunks = table.chunk_snapshot();
  for (ChunkId chunk_id = 0; chunk_id < chunks.size(); ++chunk_id) {
    const auto& chunk = chunks[chunk_id];
    if (!chunk) continue;  // physically deleted
    const CommitId cleanup = chunk->mvcc().cleanup_commit_id.load(std::memory_order_acquire);
    if (cleanup != kUnsetCid && cleanup <= ctx.snapshot_cid()) continue;
    ChunkSelection cs;
    cs.chunk_id = chunk_id;
    cs.chunk = chunk;
    cs.dense = true;
    cs.dense_size = chunk->size();
    out.chunks.push_back(std::move(cs));
  }
  return out;
}

RowSelection Executor::validate(const TransactionContext& ctx,
                                const RowSelection& input) const {
  RowSelection out;
  out.table = input.table;
  for (const auto& cs : input.chunks) {
    std::vector<ChunkOffset> kept;
    for_each_selected(cs, [&](ChunkOffset offset) {
      const RowLocation loc{input.table, cs.chunk_id, offset};
      if (ctx.sees(cs.chunk->row_meta(offset), loc)) kept.push_back(offset);
    });
    if (kept.empty()) continue;
    ChunkSelection next;
    next.chunk_id = cs.chunk_id;
    next.chunk = cs.chunk;
    if (cs.dense && kept.size() == cs.dense_size) {
      // Every row of the dense prefix is visible: the chunk still behaves
      // like an unfiltered base chunk downstream.
      next.dense = true;
      next.dense_size = cs.dense_size;
    } else {
      next.dense = false;
      next.offsets = std::move(kept);
    }
    out.chunks.push_back(std::move(next));
  }
  return out;
}

RowSelection Executor::prune_chunks(const RowSelection& input,
                                    const std::vector<PredicateSpec>& predicates) const {
  RowSelection out;
  out.table = input.table;
  for (const auto& cs : input.chunks) {
    bool pruned = false;
    for (const auto& predicate : predicates) {
      if (!predicate.pruning_usable()) continue;
      const auto stats = cs.chunk->stats(predicate.column);
      if (stats && can_prune(*stats, predicate)) {
        pruned = true;
        break;
      }
    }
    if (!pruned) out.chunks.push_back(cs);
  }
  return out;
}

std::pair<RowSelection, OperatorReport> Executor::table_scan(
    const RowSelection& input, const PredicateSpec& predicate) const {
  check_operand_types(predicate, input.table->schema());

  OperatorReport report;
  report.kind = OperatorKind::TableScan;
  report.comparator = predicate.comparator;
  report.input_rows = input.row_count();
  report.input_chunk_count = input.chunk_count();
  report.on_reference_input = !input.all_dense();
  report.pruning_usable = predicate.pruning_usable();
  report.sortedness_usable = predicate.sortedness_usable();

  const auto start = Clock::now();
  RowSelection out;
  out.table = input.table;

  for (const auto& cs : input.chunks) {
    const auto segment = cs.chunk->segment(predicate.column);
    std::vector<ChunkOffset> matched;

    const bool binary = cs.dense && cs.chunk->sort_column() == predicate.column &&
                        predicate.sortedness_usable();
    if (binary) {
      // The chunk prefix is sorted by the scan column with NULLs first;
      // qualifying rows form one contiguous offset range.
      const uint32_t n = cs.dense_size;
      auto value_at = [&](uint32_t i) { return segment->value_at(i); };
      auto first_not_null = [&]() {
        uint32_t lo = 0, hi = n;
        while (lo < hi) {
          const uint32_t mid = lo + (hi - lo) / 2;
          if (segment->is_null(mid)) {
            lo = mid + 1;
          } else {
            hi = mid;
          }
        }
        return lo;
      };
      const uint32_t begin_non_null = first_not_null();
      auto first_ge = [&](const Value& v) {
        uint32_t lo = begin_non_null, hi = n;
        while (lo < hi) {
          const uint32_t mid = lo + (hi - lo) / 2;
          if (value_compare(value_at(mid), v) < 0) {
            lo = mid + 1;
          } else {
            hi = mid;
          }
        }
        return lo;
      };
      auto first_gt = [&](const Value& v) {
        uint32_t lo = begin_non_null, hi = n;
        while (lo < hi) {
          const uint32_t mid = lo + (hi - lo) / 2;
          if (value_compare(value_at(mid), v) <= 0) {
            lo = mid + 1;
          } else {
            hi = mid;
          }
        }
        return lo;
      };

      uint32_t range_begin = begin_non_null;
      uint32_t range_end = n;
      switch (predicate.comparator) {
        case Comparator::Equals:
          range_begin = first_ge(predicate.value);
          range_end = first_gt(predicate.value);
          break;
        case Comparator::LessThan:
          range_end = first_ge(predicate.value);
          break;
        case Comparator::LessThanEquals:
          range_end = first_gt(predicate.value);
          break;
        case Comparator::GreaterThan:
          range_begin = first_gt(predicate.value);
          break;
        case Comparator::GreaterThanEquals:
          range_begin = first_ge(predicate.value);
          break;
        case Comparator::Between:
          range_begin = first_ge(predicate.value);
          range_end = first_gt(predicate.second_value);
          break;
        default:
          throw std::logic_error("comparator is not sortedness-usable");
      }
      if (range_begin < range_end) {
        matched.reserve(range_end - range_begin);
        for (uint32_t offset = range_begin; offset < range_end; ++offset) {
          matched.push_back(offset);
        }
      }
    } else {
      for_each_selected(cs, [&](ChunkOffset offset) {
        if (predicate.matches(segment->value_at(offset))) matched.push_back(offset);
      });
    }

    if (matched.empty()) continue;
    ChunkSelection next;
    next.chunk_id = cs.chunk_id;
    next.chunk = cs.chunk;
    next.dense = false;
    next.offsets = std::move(matched);
    out.chunks.push_back(std::move(next));
  }

  report.runtime_ns = elapsed_ns(start);
  report.output_rows = out.row_count();
  return {std::move(out), report};
}

Executor::JoinOutcome Executor::hash_join(const JoinInput& build, const JoinInput& probe,
                                          JoinMode mode) const {
  const auto& build_sel = *build.selection;
  const auto& probe_sel = *probe.selection;

  OperatorReport report;
  report.kind = OperatorKind::HashJoin;
  report.mode = mode;
  report.input_rows = probe_sel.row_count();
  report.input_chunk_count = probe_sel.chunk_count();
  report.on_reference_input = !probe_sel.all_dense();
  const auto total_start = Clock::now();

  // Rows are materialized as (key, original index); the original index keys
  // the matched[] flags so output order stays physical probe order.
  struct Entry {
    Value key;
    uint32_t index;
  };

  auto materialize = [](const RowSelection& sel, ColumnId column,
                        std::vector<uint32_t>* chunk_of_row,
                        std::vector<ChunkOffset>* offset_of_row) {
    std::vector<Entry> entries;
    uint32_t index = 0;
    for (uint32_t ci = 0; ci < sel.chunks.size(); ++ci) {
      const auto& cs = sel.chunks[ci];
      const auto segment = cs.chunk->segment(column);
      for_each_selected(cs, [&](ChunkOffset offset) {
        Value key = segment->value_at(offset);
        if (!is_null(key)) {
          entries.push_back(Entry{std::move(key), index});
        }
        if (chunk_of_row) chunk_of_row->push_back(ci);
        if (offset_of_row) offset_of_row->push_back(offset);
        ++index;
      });
    }
    return entries;
  };

  auto step_start = Clock::now();
  std::vector<Entry> build_rows = materialize(build_sel, build.column, nullptr, nullptr);
  report.steps.materialize_build_ns = elapsed_ns(step_start);

  step_start = Clock::now();
  std::vector<uint32_t> probe_chunk_of_row;
  std::vector<ChunkOffset> probe_offset_of_row;
  std::vector<Entry> probe_rows =
      materialize(probe_sel, probe.column, &probe_chunk_of_row, &probe_offset_of_row);
  report.steps.materialize_probe_ns = elapsed_ns(step_start);

  // Partition count: the smallest 2^r whose per-partition hash map fits the
  // cache budget. r == 0 means the whole build side fits and no radix pass
  // runs.
  uint32_t radix_bits = 0;
  const uint64_t build_keys = build_rows.size();
  if (build_keys * config_.bytes_per_hash_entry > config_.cache_budget_bytes) {
    radix_bits = 1;
    while (radix_bits < config_.max_radix_bits) {
      const uint64_t per_partition =
          (build_keys + (uint64_t{1} << radix_bits) - 1) >> radix_bits;
      if (per_partition * config_.bytes_per_hash_entry <= config_.cache_budget_bytes) break;
      ++radix_bits;
    }
  }
  const uint32_t partitions = uint32_t{1} << radix_bits;
  report.radix_bits = radix_bits;

  // Sortedness survives the join only when every input chunk on both sides is
  // sorted by its join column and no radix pass scrambled row order.
  auto side_sorted = [](const RowSelection& sel, ColumnId column) {
    for (const auto& cs : sel.chunks) {
      if (cs.chunk->sort_column() != std::optional<ColumnId>{column}) return false;
    }
    return true;
  };
  report.data_arrives_sorted = side_sorted(build_sel, build.column) &&
                               side_sorted(probe_sel, probe.column) && radix_bits == 0;

  std::vector<std::vector<Entry>> build_parts(partitions);
  std::vector<std::vector<Entry>> probe_parts(partitions);
  if (radix_bits > 0) {
    step_start = Clock::now();
    const ValueHash hasher;
    const size_t mask = partitions - 1;
    for (auto& entry : build_rows) {
      build_parts[hasher(entry.key) & mask].push_back(std::move(entry));
    }
    for (auto& entry : probe_rows) {
      probe_parts[hasher(entry.key) & mask].push_back(std::move(entry));
    }
    report.steps.radix_cluster_ns = elapsed_ns(step_start);
  } else {
    build_parts[0] = std::move(build_rows);
    probe_parts[0] = std::move(probe_rows);
  }

  // Build and probe per partition; `matched` is keyed by original probe index.
  using KeyCounts = std::unordered_map<Value, uint32_t, ValueHash, ValueEq>;
  std::vector<uint8_t> matched(probe_chunk_of_row.size(), 0);
  std::vector<Value> matched_keys;
  uint64_t output_pairs = 0;

  uint64_t build_ns = 0;
  uint64_t probe_ns = 0;
  std::vector<std::pair<uint32_t, Value>> inner_hits;  // (probe index, key)
  for (uint32_t part = 0; part < partitions; ++part) {
    step_start = Clock::now();
    KeyCounts table;
    table.reserve(build_parts[part].size());
    for (const auto& entry : build_parts[part]) {
      ++table[entry.key];
    }
    build_ns += elapsed_ns(step_start);

    step_start = Clock::now();
    for (const auto& entry : probe_parts[part]) {
      const auto hit = table.find(entry.key);
      if (hit == table.end()) continue;
      matched[entry.index] = 1;
      if (mode == JoinMode::Inner) {
        output_pairs += hit->second;
        for (uint32_t i = 0; i < hit->second; ++i) {
          inner_hits.emplace_back(entry.index, entry.key);
        }
      }
    }
    probe_ns += elapsed_ns(step_start);
  }
  report.steps.build_ns = build_ns;
  report.steps.probe_ns = probe_ns;

  // Output: rebuild the probe-side row selection (and, for inner joins, the
  // per-pair key list in probe order).
  step_start = Clock::now();
  JoinOutcome outcome;
  outcome.probe_selection.table = probe_sel.table;
  std::vector<std::vector<ChunkOffset>> per_chunk(probe_sel.chunks.size());
  for (uint32_t index = 0; index < matched.size(); ++index) {
    if (!matched[index]) continue;
    per_chunk[probe_chunk_of_row[index]].push_back(probe_offset_of_row[index]);
  }
  for (uint32_t ci = 0; ci < per_chunk.size(); ++ci) {
    if (per_chunk[ci].empty()) continue;
    std::sort(per_chunk[ci].begin(), per_chunk[ci].end());
    ChunkSelection cs;
    cs.chunk_id = probe_sel.chunks[ci].chunk_id;
    cs.chunk = probe_sel.chunks[ci].chunk;
    cs.dense = false;
    cs.offsets = std::move(per_chunk[ci]);
    outcome.probe_selection.chunks.push_back(std::move(cs));
  }
  if (mode == JoinMode::Inner) {
    std::sort(inner_hits.begin(), inner_hits.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    matched_keys.reserve(inner_hits.size());
    for (auto& [index, key] : inner_hits) matched_keys.push_back(std::move(key));
  }
  outcome.matched_keys = std::move(matched_keys);
  report.steps.output_ns = elapsed_ns(step_start);

  report.output_rows =
      mode == JoinMode::Inner ? output_pairs : outcome.probe_selection.row_count();
  report.runtime_ns = elapsed_ns(total_start);
  outcome.report = report;
  return outcome;
}

double Executor::estimate_selectivity(const RowSelection& input,
                                      const PredicateSpec& predicate) const {
  const DataType type = input.table->schema().column(predicate.column).type;

  auto numeric_fraction = [&](const MinMaxStats& stats) -> double {
    const bool integral = type == DataType::Int64;
    const double lo = integral ? static_cast<double>(std::get<int64_t>(stats.min))
                               : std::get<double>(stats.min);
    const double hi = integral ? static_cast<double>(std::get<int64_t>(stats.max))
                               : std::get<double>(stats.max);
    // Integer domains count values; continuous domains measure width.
    const double domain = integral ? hi - lo + 1 : std::max(hi - lo, 1e-12);
    auto clamp01 = [](double f) { return std::min(1.0, std::max(0.0, f)); };
    const double v = predicate.value.index() == 1
                         ? static_cast<double>(std::get<int64_t>(predicate.value))
                         : std::get<double>(predicate.value);
    switch (predicate.comparator) {
      case Comparator::Equals:
        if (v < lo || v > hi) return 0.0;
        return integral ? 1.0 / domain : 0.001;
      case Comparator::LessThan:
        return clamp01((v - lo) / domain);
      case Comparator::LessThanEquals:
        return clamp01((v - lo + (integral ? 1 : 0)) / domain);
      case Comparator::GreaterThan:
        return clamp01((hi - v) / domain);
      case Comparator::GreaterThanEquals:
        return clamp01((hi - v + (integral ? 1 : 0)) / domain);
      case Comparator::Between: {
        const double b = predicate.second_value.index() == 1
                             ? static_cast<double>(std::get<int64_t>(predicate.second_value))
                             : std::get<double>(predicate.second_value);
        const double overlap = std::min(b, hi) - std::max(v, lo) + (integral ? 1 : 0);
        return clamp01(overlap / domain);
      }
      default:
        return 0.5;
    }
  };

  // Fixed guesses for string comparators; only the relative order matters.
  auto string_fraction = [&]() -> double {
    switch (predicate.comparator) {
      case Comparator::Equals:
      case Comparator::LikePrefix:
        return 0.1;
      default:
        return 0.5;
    }
  };

  uint64_t total_rows = 0;
  double expected_rows = 0.0;
  for (const auto& cs : input.chunks) {
    const uint64_t rows = cs.row_count();
    total_rows += rows;
    const auto stats = cs.chunk->stats(predicate.column);
    double fraction = 1.0;  // no statistics: assume everything qualifies
    if (stats) {
      fraction = is_string_type(type) ? string_fraction() : numeric_fraction(*stats);
    }
    expected_rows += fraction * static_cast<double>(rows);
  }
  if (total_rows == 0) return 1.0;
  return expected_rows / static_cast<double>(total_rows);
}

QueryResult Executor::run_query(const TransactionContext& ctx, const QuerySpec& spec) const {
  // An inner join materializes pairs instead of a row selection, so nothing
  // may consume its output.
  for (size_t i = 0; i < spec.joins.size(); ++i) {
    if (spec.joins[i].mode == JoinMode::Inner && i + 1 != spec.joins.size()) {
      throw std::invalid_argument("inner join must be the final operator of a query");
    }
  }

  QueryResult result;
  result.query_id = spec.id;

  // Group scan indices per table, preserving declared order.
  std::map<std::string, std::vector<size_t>> scans_by_table;
  std::vector<std::string> table_order;
  for (size_t i = 0; i < spec.scans.size(); ++i) {
    auto& group = scans_by_table[spec.scans[i].table];
    if (group.empty()) table_order.push_back(spec.scans[i].table);
    group.push_back(i);
  }
  for (const auto& join : spec.joins) {
    for (const auto& name : {join.build_table, join.probe_table}) {
      if (!scans_by_table.count(name)) {
        scans_by_table[name];  // table participates without scans
        table_order.push_back(name);
      }
    }
  }

  // Base pipeline per table: get_table -> prune -> validate.
  std::map<std::string, RowSelection> current;
  for (const auto& name : table_order) {
    auto table = catalog_.get(name);
    std::vector<PredicateSpec> predicates;
    for (const size_t i : scans_by_table[name]) predicates.push_back(spec.scans[i].predicate);
    RowSelection sel = get_table(ctx, *table);
    sel = prune_chunks(sel, predicates);
    sel = validate(ctx, sel);
    current.emplace(name, std::move(sel));
  }

  // Scans, optionally reordered per table by estimated selectivity.
  uint32_t seq = 0;
  for (const auto& name : table_order) {
    auto order = scans_by_table[name];
    if (spec.reorder_predicates && order.size() > 1) {
      std::vector<double> estimate(spec.scans.size(), 0.0);
      for (const size_t i : order) {
        estimate[i] = estimate_selectivity(current[name], spec.scans[i].predicate);
      }
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (estimate[a] != estimate[b]) return estimate[a] < estimate[b];
        return spec.scans[a].predicate.column < spec.scans[b].predicate.column;
      });
    }
    for (const size_t i : order) {
      const auto& scan = spec.scans[i];
      auto [sel, report] = table_scan(current[name], scan.predicate);
      report.table = scan.table;
      report.column = scan.column;
      report.seq = seq++;
      result.reports.push_back(std::move(report));
      current[name] = std::move(sel);
    }
  }

  // Joins in declared order.
  for (const auto& join : spec.joins) {
    auto build_table = catalog_.get(join.build_table);
    auto probe_table = catalog_.get(join.probe_table);
    JoinInput build{&current[join.build_table],
                    build_table->schema().column_id(join.build_column)};
    JoinInput probe{&current[join.probe_table],
                    probe_table->schema().column_id(join.probe_column)};
    auto outcome = hash_join(build, probe, join.mode);
    outcome.report.table = join.probe_table;
    outcome.report.column = join.probe_column;
    outcome.report.build_table = join.build_table;
    outcome.report.build_column = join.build_column;
    result.reports.push_back(outcome.report);
    if (join.mode == JoinMode::Inner) {
      result.inner_join_keys = std::move(outcome.matched_keys);
    }
    current[join.probe_table] = std::move(outcome.probe_selection);
  }

  for (const auto& [name, sel] : current) result.final_rows[name] = sel.row_count();
  return result;
}

}  // namespace strata
