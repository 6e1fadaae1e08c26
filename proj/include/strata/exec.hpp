#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strata/catalog.hpp"
#include "strata/mvcc.hpp"
#include "strata/predicate.hpp"
#include "strata/row_selection.hpp"

namespace strata {

enum class JoinMode { Inner, Semi };

const char* join_mode_name(JoinMode mode);
std::optional<JoinMode> join_mode_from_name(const std::string& name);

enum class OperatorKind { TableScan, HashJoin };

// Per-step wall-clock breakdown of a hash join, in nanoseconds.
struct JoinStepTimes {
  uint64_t materialize_build_ns{0};
  uint64_t materialize_probe_ns{0};
  uint64_t radix_cluster_ns{0};
  uint64_t build_ns{0};
  uint64_t probe_ns{0};
  uint64_t output_ns{0};

  uint64_t sum() const {
    return materialize_build_ns + materialize_probe_ns + radix_cluster_ns + build_ns +
           probe_ns + output_ns;
  }
};

// What one executed operator did, plus enough context to turn it into a
// workload record. For scans, `table`/`column` name the scanned column; for
// joins they name the probe side and build_table/build_column the build side.
struct OperatorReport {
  OperatorKind kind{OperatorKind::TableScan};
  std::string table;
  std::string column;
  std::string build_table;
  std::string build_column;
  JoinMode mode{JoinMode::Inner};
  Comparator comparator{Comparator::Equals};
  uint32_t seq{0};  // execution index within the query, scans only

  uint64_t input_rows{0};
  uint64_t output_rows{0};
  uint32_t input_chunk_count{0};
  uint64_t runtime_ns{0};
  JoinStepTimes steps;
  uint32_t radix_bits{0};  // joins: 2^radix_bits partitions; 0 = no radix pass

  bool on_reference_input{false};
  bool data_arrives_sorted{false};
  bool pruning_usable{false};
  bool sortedness_usable{false};
};

// One scan operator of a query, referencing a base table by name.
struct ScanOp {
  std::string table;
  std::string column;
  PredicateSpec predicate;  // column id resolved against the table's schema
};

// One hash-join operator of a query.
struct JoinOp {
  JoinMode mode{JoinMode::Inner};
  std::string build_table;
  std::string build_column;
  std::string probe_table;
  std::string probe_column;
};

// A query: scans execute first (optionally reordered per table), then joins
// in declared order. Semi joins replace the probe table's row selection, so
// later operators on that table consume the filtered input; an inner join
// materializes output pairs and must therefore be the final operator.
struct QuerySpec {
  std::string id;
  std::vector<ScanOp> scans;
  std::vector<JoinOp> joins;
  bool reorder_predicates{false};
};

struct QueryResult {
  std::string query_id;
  std::vector<OperatorReport> reports;
  // Final per-table row counts after all operators, keyed by table name.
  std::map<std::string, uint64_t> final_rows;
  // Matched join keys of the terminal inner join (one entry per output pair),
  // in probe order. Empty when the query has no inner join.
  std::vector<Value> inner_join_keys;
};

struct ExecConfig {
  // Hash maps larger than this are radix-partitioned first (stand-in for the
  // cache level the partitioning is meant to fit).
  uint64_t cache_budget_bytes{uint64_t{1} << 21};
  // Estimated bytes one build-side hash table entry occupies.
  uint64_t bytes_per_hash_entry{48};
  uint32_t max_radix_bits{8};
};

class Executor {
 public:
  explicit Executor(Catalog& catalog, ExecConfig config = {})
      : catalog_(catalog), config_(config) {}

  // All chunks of the table except those cleaned up at or before the
  // snapshot. Selections are dense over the published row counts.
  RowSelection get_table(const TransactionContext& ctx, Table& table) const;

  // Retains exactly the rows visible to `ctx`. Chunks whose every input row
  // is visible keep the dense representation.
  RowSelection validate(const TransactionContext& ctx, const RowSelection& input) const;

  // Drops chunks a pruning-usable predicate proves empty (zone maps).
  RowSelection prune_chunks(const RowSelection& input,
                            const std::vector<PredicateSpec>& predicates) const;

  // Filters `input` by `predicate`. Binary search is used on chunks whose
  // selection is dense, whose sort column equals the predicate column, and
  // whose comparator supports it; everything else takes the linear path.
  std::pair<RowSelection, OperatorReport> table_scan(const RowSelection& input,
                                                     const PredicateSpec& predicate) const;

  struct JoinInput {
    const RowSelection* selection{nullptr};
    ColumnId column{0};
  };

  struct JoinOutcome {
    // Semi join: probe rows with at least one build match. Inner join: probe
    // rows that matched (row multiplicity NOT applied; use matched_keys for
    // pair-level output).
    RowSelection probe_selection;
    // Inner join only: the join key of every output pair.
    std::vector<Value> matched_keys;
    OperatorReport report;
  };

  JoinOutcome hash_join(const JoinInput& build, const JoinInput& probe, JoinMode mode) const;

  // Executes get_table -> (optional scan reorder) -> prune -> validate ->
  // scans -> joins and reports per-operator statistics.
  QueryResult run_query(const TransactionContext& ctx, const QuerySpec& spec) const;

  // Estimated fraction of rows in `input` satisfying `predicate`, from chunk
  // min/max statistics under a uniformity assumption. Used for reordering.
  double estimate_selectivity(const RowSelection& input, const PredicateSpec& predicate) const;

  const ExecConfig& config() const { return config_; }

 private:
  Catalog& catalog_;
  ExecConfig config_;
};

}  // namespace strata
