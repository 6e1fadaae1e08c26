#pragma once

#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "strata/catalog.hpp"
#include "strata/exec.hpp"

namespace strata {

// One executed table scan, as the advisor consumes it.
struct ScanRecord {
  std::string query_id;
  uint32_t seq{0};  // execution order within the query
  std::string table;
  std::string column;
  Comparator comparator{Comparator::Equals};
  double selectivity{1.0};  // output_rows / input_rows; 1 when input is empty
  uint64_t input_rows{0};
  uint64_t output_rows{0};
  uint64_t runtime_ns{0};
  bool on_reference_input{false};
  bool pruning_usable{false};
  bool sortedness_usable{false};

  bool operator==(const ScanRecord&) const = default;
};

// One executed hash join with its step-wise runtime breakdown.
struct JoinRecord {
  std::string query_id;
  JoinMode mode{JoinMode::Inner};
  std::string build_table;
  std::string build_column;
  std::string probe_table;
  std::string probe_column;
  uint64_t probe_input_rows{0};
  uint32_t probe_input_chunks{0};
  uint64_t mat_build_ns{0};
  uint64_t mat_probe_ns{0};
  uint64_t radix_ns{0};
  uint64_t build_ns{0};
  uint64_t probe_ns{0};
  uint64_t output_ns{0};
  bool data_arrives_sorted{false};
  // Scan predicates the same query applied to the probe table: (column,
  // realized selectivity), in execution order.
  std::vector<std::pair<std::string, double>> probe_side_predicates;

  bool operator==(const JoinRecord&) const = default;

  uint64_t total_ns() const {
    return mat_build_ns + mat_probe_ns + radix_ns + build_ns + probe_ns + output_ns;
  }
};

struct TableMeta {
  std::string table;
  uint64_t row_count{0};
  uint32_t chunk_count{0};
  uint32_t chunk_capacity{0};

  bool operator==(const TableMeta&) const = default;
};

struct ColumnMeta {
  std::string table;
  std::string column;
  uint64_t distinct_count{0};
  bool nullable{false};
  bool sorted_by{false};  // every live chunk is sorted by this column

  bool operator==(const ColumnMeta&) const = default;
};

struct WorkloadSnapshot {
  std::vector<ScanRecord> scans;
  std::vector<JoinRecord> joins;
  std::vector<TableMeta> tables;
  std::vector<ColumnMeta> columns;
  std::string captured_at;  // ISO-8601 UTC

  bool operator==(const WorkloadSnapshot&) const = default;

  const TableMeta* find_table(const std::string& name) const;
  const ColumnMeta* find_column(const std::string& table, const std::string& column) const;
};

// Accumulates records from executed queries. Thread-safe appends.
class WorkloadRecorder {
 public:
  // Converts every scan/join report of the result into records.
  void record_query(const QueryResult& result);

  // Computes table/column metadata for every catalog table: live row counts,
  // live chunk counts, distinct values, and table-wide sortedness.
  static std::vector<TableMeta> capture_table_meta(const Catalog& catalog);
  static std::vector<ColumnMeta> capture_column_meta(const Catalog& catalog);

  // Copies the accumulated records plus freshly captured metadata.
  WorkloadSnapshot snapshot(const Catalog& catalog) const;

  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<ScanRecord> scans_;
  std::vector<JoinRecord> joins_;
};

// Writes scans.csv, joins.csv, table_meta.csv, column_meta.csv (and the
// capture timestamp) into `directory`, creating it if needed.
void export_csv(const WorkloadSnapshot& snapshot, const std::string& directory);

// Loads a snapshot back; validates headers, that every record resolves
// against the metadata, and that selectivity * input_rows ≈ output_rows (±1).
// Throws std::runtime_error naming the problem.
WorkloadSnapshot import_csv(const std::string& directory);

// Scans on `table`, grouped per query in order of first appearance; within a
// group, records are ordered by execution sequence.
std::vector<std::vector<ScanRecord>> group_scans_by_query(const WorkloadSnapshot& snapshot,
                                                          const std::string& table);

}  // namespace strata
