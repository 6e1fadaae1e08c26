#include "strata/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "strata/csv.hpp"

namespace strata {

namespace {

constexpr const char* kScanHeader =
    "query_id,seq,table,column,comparator,selectivity,input_rows,output_rows,runtime_ns,"
    "on_reference_input,pruning_usable,sortedness_usable";
constexpr const char* kJoinHeader =
    "query_id,mode,build_table,build_column,probe_table,probe_column,probe_input_rows,"
    "probe_input_chunks,mat_build_ns,mat_probe_ns,radix_ns,build_ns,probe_ns,output_ns,"
    "data_arrives_sorted,probe_side_predicates";
constexpr const char* kTableHeader = "table,row_count,chunk_count,chunk_capacity";
constexpr const char* kColumnHeader = "table,column,distinct_count,nullable,sorted_by";

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string format_bool(bool v) { return v ? "1" : "0"; }

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw std::runtime_error(where + ": bad boolean '" + text + "'");
}

uint64_t parse_u64(const std::string& text, const std::string& where) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": bad integer '" + text + "'");
  }
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": bad number '" + text + "'");
  }
}

// Verifies an exact header, naming the first missing column on mismatch.
void check_header(const std::string& actual, const char* expected, const std::string& file) {
  if (actual == expected) return;
  const auto actual_fields = csv_split(actual);
  for (const auto& field : csv_split(expected)) {
    if (std::find(actual_fields.begin(), actual_fields.end(), field) ==
        actual_fields.end()) {
      throw std::runtime_error(file + ": missing column '" + field + "'");
    }
  }
  throw std::runtime_error(file + ": unexpected header layout");
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error(path.string() + ": empty file, header expected");
  return lines;
}

std::string serialize_predicates(const std::vector<std::pair<std::string, double>>& preds) {
  std::string out;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (i > 0) out += ';';
    out += preds[i].first + ":" + format_double(preds[i].second);
  }
  return out;
}

std::vector<std::pair<std::string, double>> parse_predicates(const std::string& text,
                                                             const std::string& where) {
  std::vector<std::pair<std::string, double>> out;
  if (text.empty()) return out;
  std::istringstream parts(text);
  std::string item;
  while (std::getline(parts, item, ';')) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw std::runtime_error(where + ": bad predicate entry '" + item + "'");
    }
    out.emplace_back(item.substr(0, colon),
                     parse_double(item.substr(colon + 1), where));
  }
  return out;
}

std::string now_iso8601() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

// Rows that are committed and not invalidated, i.e. visible to a fresh
// transaction. Uncommitted inserts and tombstones are excluded.
bool row_is_live(const MvccRowMeta& meta) {
  return meta.end_cid.load(std::memory_order_acquire) == kUnsetCid &&
         meta.begin_cid.load(std::memory_order_acquire) != kUnsetCid;
}

}  // namespace

const TableMeta* WorkloadSnapshot::find_table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.table == name) return &t;
  }
  return nullptr;
}

const ColumnMeta* WorkloadSnapshot::find_column(const std::string& table,
                                                const std::string& column) const {
  for (const auto& c : columns) {
    if (c.table == table && c.column == column) return &c;
  }
  return nullptr;
}

void WorkloadRecorder::record_query(const QueryResult& result) {
  std::vector<ScanRecord> scans;
  std::vector<JoinRecord> joins;

  for (const auto& report : result.reports) {
    if (report.kind == OperatorKind::TableScan) {
      ScanRecord record;
      record.query_id = result.query_id;
      record.seq = report.seq;
      record.table = report.table;
      record.column = report.column;
      record.comparator = report.comparator;
      record.input_rows = report.input_rows;
      record.output_rows = report.output_rows;
      record.selectivity = report.input_rows == 0
                               ? 1.0
                               : static_cast<double>(report.output_rows) /
                                     static_cast<double>(report.input_rows);
      record.runtime_ns = report.runtime_ns;
      record.on_reference_input = report.on_reference_input;
      record.pruning_usable = report.pruning_usable;
      record.sortedness_usable = report.sortedness_usable;
      scans.push_back(std::move(record));
    } else {
      JoinRecord record;
      record.query_id = result.query_id;
      record.mode = report.mode;
      record.build_table = report.build_table;
      record.build_column = report.build_column;
      record.probe_table = report.table;
      record.probe_column = report.column;
      record.probe_input_rows = report.input_rows;
      record.probe_input_chunks = report.input_chunk_count;
      record.mat_build_ns = report.steps.materialize_build_ns;
      record.mat_probe_ns = report.steps.materialize_probe_ns;
      record.radix_ns = report.steps.radix_cluster_ns;
      record.build_ns = report.steps.build_ns;
      record.probe_ns = report.steps.probe_ns;
      record.output_ns = report.steps.output_ns;
      record.data_arrives_sorted = report.data_arrives_sorted;
      joins.push_back(std::move(record));
    }
  }

  // Attach each join's probe-side scan predicates (column, realized
  // selectivity) from the same query, in execution order.
  for (auto& join : joins) {
    for (const auto& scan : scans) {
      if (scan.table == join.probe_table) {
        join.probe_side_predicates.emplace_back(scan.column, scan.selectivity);
      }
    }
  }

  std::lock_guard<std::mutex> guard(mutex_);
  scans_.insert(scans_.end(), scans.begin(), scans.end());
  joins_.insert(joins_.end(), joins.begin(), joins.end());
}

std::vector<TableMeta> WorkloadRecorder::capture_table_meta(const Catalog& catalog) {
  std::vector<TableMeta> out;
  for (const auto& [name, table] : catalog.tables()) {
    TableMeta meta;
    meta.table = name;
    meta.chunk_capacity = table->chunk_capacity();
    for (const auto& chunk : table->chunk_snapshot()) {
      if (!chunk) continue;
      uint64_t live = 0;
      const uint32_t rows = chunk->size();
      for (ChunkOffset offset = 0; offset < rows; ++offset) {
        if (row_is_live(chunk->row_meta(offset))) ++live;
      }
      if (live > 0) {
        meta.row_count += live;
        ++meta.chunk_count;
      }
    }
    out.push_back(std::move(meta));
  }
  return out;
}

std::vector<ColumnMeta> WorkloadRecorder::capture_column_meta(const Catalog& catalog) {
  std::vector<ColumnMeta> out;
  for (const auto& [name, table] : catalog.tables()) {
    const auto& schema = table->schema();
    const auto chunks = table->chunk_snapshot();
    for (ColumnId column = 0; column < schema.column_count(); ++column) {
      ColumnMeta meta;
      meta.table = name;
      meta.column = schema.column(column).name;
      meta.nullable = schema.column(column).nullable;

      std::unordered_set<Value, ValueHash, ValueEq> distinct;
      bool any_live_chunk = false;
      bool all_sorted = true;
      for (ChunkId chunk_id = 0; chunk_id < chunks.size(); ++chunk_id) {
        const auto& chunk = chunks[chunk_id];
        if (!chunk) continue;
        const auto segment = chunk->segment(column);
        uint64_t live = 0;
        const uint32_t rows = chunk->size();
        for (ChunkOffset offset = 0; offset < rows; ++offset) {
          if (!row_is_live(chunk->row_meta(offset))) continue;
          ++live;
          if (!segment->is_null(offset)) distinct.insert(segment->value_at(offset));
        }
        if (live > 0) {
          any_live_chunk = true;
          if (chunk->sort_column() != std::optional<ColumnId>{column}) all_sorted = false;
        }
      }
      meta.distinct_count = distinct.size();
      meta.sorted_by = any_live_chunk && all_sorted;
      out.push_back(std::move(meta));
    }
  }
  return out;
}

WorkloadSnapshot WorkloadRecorder::snapshot(const Catalog& catalog) const {
  WorkloadSnapshot snap;
  {
    std::lock_guard<std::mutex> guard(mutex_);
    snap.scans = scans_;
    snap.joins = joins_;
  }
  snap.tables = capture_table_meta(catalog);
  snap.columns = capture_column_meta(catalog);
  snap.captured_at = now_iso8601();
  return snap;
}

void WorkloadRecorder::clear() {
  std::lock_guard<std::mutex> guard(mutex_);
  scans_.clear();
  joins_.clear();
}

void export_csv(const WorkloadSnapshot& snapshot, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  auto open = [&](const char* file) {
    std::ofstream out(fs::path(directory) / file);
    if (!out) throw std::runtime_error(std::string("cannot write ") + file);
    return out;
  };

  {
    auto out = open("scans.csv");
    out << kScanHeader << "\n";
    for (const auto& s : snapshot.scans) {
      out << csv_join({s.query_id, std::to_string(s.seq), s.table, s.column,
                       comparator_name(s.comparator), format_double(s.selectivity),
                       std::to_string(s.input_rows), std::to_string(s.output_rows),
                       std::to_string(s.runtime_ns), format_bool(s.on_reference_input),
                       format_bool(s.pruning_usable), format_bool(s.sortedness_usable)})
          << "\n";
    }
  }
  {
    auto out = open("joins.csv");
    out << kJoinHeader << "\n";
    for (const auto& j : snapshot.joins) {
      out << csv_join({j.query_id, join_mode_name(j.mode), j.build_table, j.build_column,
                       j.probe_table, j.probe_column, std::to_string(j.probe_input_rows),
                       std::to_string(j.probe_input_chunks), std::to_string(j.mat_build_ns),
                       std::to_string(j.mat_probe_ns), std::to_string(j.radix_ns),
                       std::to_string(j.build_ns), std::to_string(j.probe_ns),
                       std::to_string(j.output_ns), format_bool(j.data_arrives_sorted),
                       serialize_predicates(j.probe_side_predicates)})
          << "\n";
    }
  }
  {
    auto out = open("table_meta.csv");
    out << kTableHeader << "\n";
    for (const auto& t : snapshot.tables) {
      out << csv_join({t.table, std::to_string(t.row_count), std::to_string(t.chunk_count),
                       std::to_string(t.chunk_capacity)})
          << "\n";
    }
  }
  {
    auto out = open("column_meta.csv");
    out << kColumnHeader << "\n";
    for (const auto& c : snapshot.columns) {
      out << csv_join({c.table, c.column, std::to_string(c.distinct_count),
                       format_bool(c.nullable), format_bool(c.sorted_by)})
          << "\n";
    }
  }
  {
    auto out = open("capture.txt");
    out << snapshot.captured_at << "\n";
  }
}

WorkloadSnapshot import_csv(const std::string& directory) {
  namespace fs = std::filesystem;
  WorkloadSnapshot snap;

  auto row_where = [](const char* file, size_t line) {
    return std::string(file) + " line " + std::to_string(line + 1);
  };

  {
    const auto lines = read_lines(fs::path(directory) / "table_meta.csv");
    check_header(lines[0], kTableHeader, "table_meta.csv");
    for (size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = csv_split(lines[i]);
      const auto where = row_where("table_meta.csv", i);
      if (f.size() != 4) throw std::runtime_error(where + ": expected 4 fields");
      TableMeta t;
      t.table = f[0];
      t.row_count = parse_u64(f[1], where);
      t.chunk_count = static_cast<uint32_t>(parse_u64(f[2], where));
      t.chunk_capacity = static_cast<uint32_t>(parse_u64(f[3], where));
      snap.tables.push_back(std::move(t));
    }
  }
  {
    const auto lines = read_lines(fs::path(directory) / "column_meta.csv");
    check_header(lines[0], kColumnHeader, "column_meta.csv");
    for (size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = csv_split(lines[i]);
      const auto where = row_where("column_meta.csv", i);
      if (f.size() != 5) throw std::runtime_error(where + ": expected 5 fields");
      ColumnMeta c;
      c.table = f[0];
      c.column = f[1];
      c.distinct_count = parse_u64(f[2], where);
      c.nullable = parse_bool(f[3], where);
      c.sorted_by = parse_bool(f[4], where);
      if (!snap.find_table(c.table)) {
        throw std::runtime_error(where + ": unknown table '" + c.table + "'");
      }
      snap.columns.push_back(std::move(c));
    }
  }
  {
    const auto lines = read_lines(fs::path(directory) / "scans.csv");
    check_header(lines[0], kScanHeader, "scans.csv");
    for (size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = csv_split(lines[i]);
      const auto where = row_where("scans.csv", i);
      if (f.size() != 12) throw std::runtime_error(where + ": expected 12 fields");
      ScanRecord s;
      s.query_id = f[0];
      s.seq = static_cast<uint32_t>(parse_u64(f[1], where));
      s.table = f[2];
      s.column = f[3];
      const auto comparator = comparator_from_name(f[4]);
      if (!comparator) throw std::runtime_error(where + ": bad comparator '" + f[4] + "'");
      s.comparator = *comparator;
      s.selectivity = parse_double(f[5], where);
      s.input_rows = parse_u64(f[6], where);
      s.output_rows = parse_u64(f[7], where);
      s.runtime_ns = parse_u64(f[8], where);
      s.on_reference_input = parse_bool(f[9], where);
      s.pruning_usable = parse_bool(f[10], where);
      s.sortedness_usable = parse_bool(f[11], where);

      if (!snap.find_column(s.table, s.column)) {
        throw std::runtime_error(where + ": unresolvable column '" + s.table + "." +
                                 s.column + "'");
      }
      if (s.selectivity < 0.0 || s.selectivity > 1.0) {
        throw std::runtime_error(where + ": selectivity out of [0,1]");
      }
      const double expected = s.selectivity * static_cast<double>(s.input_rows);
      if (std::abs(expected - static_cast<double>(s.output_rows)) > 1.0 + 1e-6) {
        throw std::runtime_error(where + ": selectivity inconsistent with row counts");
      }
      snap.scans.push_back(std::move(s));
    }
  }
  {
    const auto lines = read_lines(fs::path(directory) / "joins.csv");
    check_header(lines[0], kJoinHeader, "joins.csv");
    for (size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = csv_split(lines[i]);
      const auto where = row_where("joins.csv", i);
      if (f.size() != 16) throw std::runtime_error(where + ": expected 16 fields");
      JoinRecord j;
      j.query_id = f[0];
      const auto mode = join_mode_from_name(f[1]);
      if (!mode) throw std::runtime_error(where + ": bad join mode '" + f[1] + "'");
      j.mode = *mode;
      j.build_table = f[2];
      j.build_column = f[3];
      j.probe_table = f[4];
      j.probe_column = f[5];
      j.probe_input_rows = parse_u64(f[6], where);
      j.probe_input_chunks = static_cast<uint32_t>(parse_u64(f[7], where));
      j.mat_build_ns = parse_u64(f[8], where);
      j.mat_probe_ns = parse_u64(f[9], where);
      j.radix_ns = parse_u64(f[10], where);
      j.build_ns = parse_u64(f[11], where);
      j.probe_ns = parse_u64(f[12], where);
      j.output_ns = parse_u64(f[13], where);
      j.data_arrives_sorted = parse_bool(f[14], where);
      j.probe_side_predicates = parse_predicates(f[15], where);

      for (const auto& [table, column] :
           {std::pair{j.build_table, j.build_column}, std::pair{j.probe_table, j.probe_column}}) {
        if (!snap.find_column(table, column)) {
          throw std::runtime_error(where + ": unresolvable column '" + table + "." + column +
                                   "'");
        }
      }
      for (const auto& [column, selectivity] : j.probe_side_predicates) {
        if (!snap.find_column(j.probe_table, column)) {
          throw std::runtime_error(where + ": unresolvable probe predicate column '" + column +
                                   "'");
        }
        if (selectivity < 0.0 || selectivity > 1.0) {
          throw std::runtime_error(where + ": predicate selectivity out of [0,1]");
        }
      }
      snap.joins.push_back(std::move(j));
    }
  }

  {
    std::ifstream in(fs::path(directory) / "capture.txt");
    if (in) std::getline(in, snap.captured_at);
  }
  return snap;
}

std::vector<std::vector<ScanRecord>> group_scans_by_query(const WorkloadSnapshot& snapshot,
                                                          const std::string& table) {
  std::vector<std::string> order;
  std::vector<std::vector<ScanRecord>> groups;
  for (const auto& scan : snapshot.scans) {
    if (scan.table != table) continue;
    auto at = std::find(order.begin(), order.end(), scan.query_id);
    if (at == order.end()) {
      order.push_back(scan.query_id);
      groups.emplace_back();
      at = order.end() - 1;
    }
    groups[static_cast<size_t>(at - order.begin())].push_back(scan);
  }
  for (auto& group : groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const ScanRecord& a, const ScanRecord& b) { return a.seq < b.seq; });
  }
  return groups;
}

}  // namespace strata
