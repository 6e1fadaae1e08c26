#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "strata/advisor.hpp"

namespace {

using namespace strata;

ScanRecord scan_rec(std::string query, uint32_t seq, std::string table, std::string column,
                    double selectivity, uint64_t input, uint64_t output, uint64_t ns,
                    bool pruning = true, bool sorted = false) {
  ScanRecord r;
  r.query_id = std::move(query);
  r.seq = seq;
  r.table = std::move(table);
  r.column = std::move(column);
  r.selectivity = selectivity;
  r.input_rows = input;
  r.output_rows = output;
  r.runtime_ns = ns;
  r.pruning_usable = pruning;
  r.sortedness_usable = sorted;
  return r;
}

JoinRecord join_rec(std::string query, std::string build_table, std::string build_column,
                    std::string probe_table, std::string probe_column, uint64_t probe_rows,
                    uint64_t mat_build, uint64_t mat_probe, uint64_t radix, uint64_t build,
                    uint64_t probe, uint64_t output, bool sorted = false) {
  JoinRecord j;
  j.query_id = std::move(query);
  j.build_table = std::move(build_table);
  j.build_column = std::move(build_column);
  j.probe_table = std::move(probe_table);
  j.probe_column = std::move(probe_column);
  j.probe_input_rows = probe_rows;
  j.mat_build_ns = mat_build;
  j.mat_probe_ns = mat_probe;
  j.radix_ns = radix;
  j.build_ns = build;
  j.probe_ns = probe;
  j.output_ns = output;
  j.data_arrives_sorted = sorted;
  return j;
}

TableMeta table_meta(std::string table, uint64_t rows, uint32_t chunks, uint32_t capacity) {
  TableMeta m;
  m.table = std::move(table);
  m.row_count = rows;
  m.chunk_count = chunks;
  m.chunk_capacity = capacity;
  return m;
}

ColumnMeta column_meta(std::string table, std::string column, uint64_t distinct,
                       bool sorted_by = false) {
  ColumnMeta m;
  m.table = std::move(table);
  m.column = std::move(column);
  m.distinct_count = distinct;
  m.sorted_by = sorted_by;
  return m;
}

std::vector<std::string> read_lines_of(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("interesting columns split by scan and join usage") {
  WorkloadSnapshot snapshot;
  snapshot.scans = {scan_rec("q1", 1, "t", "a", 0.1, 100, 10, 50),
                    scan_rec("q1", 2, "t", "b", 0.5, 10, 5, 20),
                    scan_rec("q2", 1, "u", "x", 0.1, 100, 10, 50)};
  snapshot.joins = {join_rec("q3", "t", "c", "u", "y", 100, 1, 1, 1, 1, 1, 1),
                    join_rec("q4", "u", "y", "t", "a", 100, 1, 1, 1, 1, 1, 1)};

  const InterestingColumns columns = interesting_columns(snapshot, "t");
  CHECK(columns.scan_columns == std::vector<std::string>{"a", "b"});
  CHECK(columns.join_columns == std::vector<std::string>{"a", "c"});

  const InterestingColumns other = interesting_columns(snapshot, "u");
  CHECK(other.scan_columns == std::vector<std::string>{"x"});
  CHECK(other.join_columns == std::vector<std::string>{"y"});
}

TEST_CASE("candidate generation crosses column subsets with sort columns") {
  SUBCASE("three columns at dimensionality two give eighteen candidates") {
    InterestingColumns columns{{"a", "b"}, {"c"}};
    const auto candidates = generate_candidates(columns, 2);
    // (C(3,1) + C(3,2)) * 3 sort choices.
    CHECK(candidates.size() == 18);
    std::set<std::pair<std::vector<std::string>, std::string>> seen;
    for (const auto& candidate : candidates) {
      CHECK(candidate.clustering_columns.size() >= 1);
      CHECK(candidate.clustering_columns.size() <= 2);
      CHECK(std::is_sorted(candidate.clustering_columns.begin(),
                           candidate.clustering_columns.end()));
      CHECK(seen.emplace(candidate.clustering_columns, candidate.sort_column).second);
    }
  }
  SUBCASE("single column gives the single candidate") {
    InterestingColumns columns{{"a"}, {}};
    const auto candidates = generate_candidates(columns, 1);
    REQUIRE(candidates.size() == 1);
    CHECK(candidates[0].clustering_columns == std::vector<std::string>{"a"});
    CHECK(candidates[0].sort_column == "a");
  }
  SUBCASE("dimensionality beyond the column count includes the full set") {
    InterestingColumns columns{{"a", "b", "c"}, {}};
    const auto candidates = generate_candidates(columns, 5);
    // (C(3,1) + C(3,2) + C(3,3)) * 3.
    CHECK(candidates.size() == 21);
    const bool has_full = std::any_of(candidates.begin(), candidates.end(), [](const auto& c) {
      return c.clustering_columns == std::vector<std::string>{"a", "b", "c"};
    });
    CHECK(has_full);
  }
  SUBCASE("a column in both buckets is not duplicated") {
    InterestingColumns columns{{"a"}, {"a"}};
    const auto candidates = generate_candidates(columns, 1);
    CHECK(candidates.size() == 1);
  }
}

TEST_CASE("cluster count determination") {
  WorkloadSnapshot snapshot;
  snapshot.tables = {table_meta("t", 60000000, 916, 65535)};
  snapshot.columns = {column_meta("t", "o1", 10000), column_meta("t", "o2", 10000),
                      column_meta("t", "l_shipdate", 2526),
                      column_meta("t", "l_orderkey", 15000000),
                      column_meta("t", "l_discount", 11), column_meta("t", "wide", 5000),
                      column_meta("t", "u1", 100), column_meta("t", "u2", 10000)};
  ModelConfig config;

  SUBCASE("join-only candidates split the chunk count evenly") {
    InterestingColumns columns{{}, {"o1", "o2"}};
    const auto counts = determine_cluster_counts({{"o1", "o2"}, "o1"}, columns, snapshot, "t", config);
    // ceil(sqrt(916)) = 31 for each of the two join columns.
    CHECK(counts.at("o1") == 31);
    CHECK(counts.at("o2") == 31);
  }
  SUBCASE("scan column takes the budget left after the join base") {
    InterestingColumns columns{{"l_shipdate"}, {"l_orderkey"}};
    const auto counts = determine_cluster_counts({{"l_orderkey", "l_shipdate"}, "l_shipdate"},
                                                 columns, snapshot, "t", config);
    CHECK(counts.at("l_orderkey") == 3);
    CHECK(counts.at("l_shipdate") == 100);  // 916/3 apportionment capped at 100
  }
  SUBCASE("counts clamp to the distinct count") {
    InterestingColumns columns{{"l_discount"}, {}};
    const auto counts =
        determine_cluster_counts({{"l_discount"}, "l_discount"}, columns, snapshot, "t", config);
    CHECK(counts.at("l_discount") == 11);
  }
  SUBCASE("counts clamp to the configured maximum") {
    InterestingColumns columns{{"wide"}, {}};
    const auto counts = determine_cluster_counts({{"wide"}, "wide"}, columns, snapshot, "t", config);
    CHECK(counts.at("wide") == 100);
  }
  SUBCASE("log-proportional apportionment over two scan columns") {
    WorkloadSnapshot small = snapshot;
    small.tables = {table_meta("t", 1000000, 100, 65535)};
    InterestingColumns columns{{"u1", "u2"}, {}};
    const auto counts = determine_cluster_counts({{"u1", "u2"}, "u1"}, columns, small, "t", config);
    // available = 100; exponents ln(100)/ln(10^6) = 1/3 and 2/3.
    CHECK(counts.at("u1") == 5);   // round(100^(1/3)) = round(4.64)
    CHECK(counts.at("u2") == 22);  // round(100^(2/3)) = round(21.54)
  }
  SUBCASE("counts floor at one when the budget runs out") {
    WorkloadSnapshot tiny = snapshot;
    tiny.tables = {table_meta("t", 100, 2, 65535)};
    InterestingColumns columns{{"u1"}, {"l_orderkey", "o1", "o2"}};
    const auto counts = determine_cluster_counts({{"l_orderkey", "o1", "o2", "u1"}, "u1"}, columns,
                                                 tiny, "t", config);
    CHECK(counts.at("o1") == 3);
    CHECK(counts.at("o2") == 3);
    CHECK(counts.at("l_orderkey") == 3);
    CHECK(counts.at("u1") == 1);  // 2/27 rounds to zero, floored to one
  }
  SUBCASE("a column in scans and joins keeps the join-column floor") {
    WorkloadSnapshot tiny = snapshot;
    tiny.tables = {table_meta("t", 100, 2, 65535)};
    InterestingColumns columns{{"u2"}, {"u2"}};
    const auto counts = determine_cluster_counts({{"u2"}, "u2"}, columns, tiny, "t", config);
    CHECK(counts.at("u2") == 3);  // round(2) = 2, floored to the join base
  }
  SUBCASE("unknown table or column is reported") {
    InterestingColumns columns{{"u1"}, {}};
    CHECK_THROWS_AS(determine_cluster_counts({{"u1"}, "u1"}, columns, snapshot, "missing", config),
                    std::invalid_argument);
    CHECK_THROWS_AS(determine_cluster_counts({{"ghost"}, "ghost"}, columns, snapshot, "t", config),
                    std::invalid_argument);
  }
}

TEST_CASE("unprunable part of a query's scans") {
  ModelConfig config;
  SUBCASE("selectivity rounds up to the next cluster boundary") {
    TableClustering clustering{{{"a", 10}}, std::nullopt};
    const auto scans = std::vector<ScanRecord>{scan_rec("q", 1, "t", "a", 0.15, 100, 15, 10)};
    CHECK(estimate_unprunable_part(scans, clustering, config) == 0.2);
  }
  SUBCASE("no scans on clustering columns leave the table unpruned") {
    TableClustering clustering{{{"z", 10}}, std::nullopt};
    const auto scans = std::vector<ScanRecord>{scan_rec("q", 1, "t", "a", 0.15, 100, 15, 10)};
    CHECK(estimate_unprunable_part(scans, clustering, config) == 1.0);
  }
  SUBCASE("independent predicates multiply") {
    TableClustering clustering{{{"a", 10}, {"b", 20}}, std::nullopt};
    const auto scans = std::vector<ScanRecord>{scan_rec("q", 1, "t", "a", 0.15, 100, 15, 10),
                                               scan_rec("q", 2, "t", "b", 0.02, 15, 1, 5)};
    CHECK(estimate_unprunable_part(scans, clustering, config) == doctest::Approx(0.01));
  }
  SUBCASE("scans that cannot prune are ignored") {
    TableClustering clustering{{{"a", 10}}, std::nullopt};
    const auto scans = std::vector<ScanRecord>{
        scan_rec("q", 1, "t", "a", 0.15, 100, 15, 10, /*pruning=*/false)};
    CHECK(estimate_unprunable_part(scans, clustering, config) == 1.0);
  }
  SUBCASE("a selectivity landing on a boundary is not pushed over it") {
    TableClustering clustering{{{"a", 10}}, std::nullopt};
    const auto scans = std::vector<ScanRecord>{scan_rec("q", 1, "t", "a", 0.2, 100, 20, 10)};
    CHECK(estimate_unprunable_part(scans, clustering, config) == 0.2);
  }
  SUBCASE("correlated columns prune through the hint with a penalized selectivity") {
    TableClustering clustering{{{"c", 10}}, std::nullopt};
    CorrelationHints hints;
    hints.pairs = {{"t", "a", "c"}};
    const auto scans = std::vector<ScanRecord>{scan_rec("q", 1, "t", "a", 0.08, 100, 8, 10)};
    // 0.08 * 2.0 = 0.16 -> ceil(1.6)/10.
    CHECK(estimate_unprunable_part(scans, clustering, config, hints) == 0.2);
    // The penalized selectivity caps at one.
    const auto wide = std::vector<ScanRecord>{scan_rec("q", 1, "t", "a", 0.6, 100, 60, 10)};
    CHECK(estimate_unprunable_part(wide, clustering, config, hints) == 1.0);
    // A hint for another table does not fire.
    CorrelationHints elsewhere;
    elsewhere.pairs = {{"u", "a", "c"}};
    CHECK(estimate_unprunable_part(scans, clustering, config, elsewhere) == 1.0);
  }
  SUBCASE("bounded by (0,1], never increased by refining clusters") {
    for (const double sel : {0.003, 0.01, 0.15, 0.33, 0.5, 0.77, 1.0}) {
      double previous = 1.0;
      for (uint32_t k = 1; k <= 256; k *= 2) {
        TableClustering clustering{{{"a", k}}, std::nullopt};
        const auto scans = std::vector<ScanRecord>{
            scan_rec("q", 1, "t", "a", sel, 1000, uint64_t(1000 * sel), 10)};
        const double part = estimate_unprunable_part(scans, clustering, config);
        CHECK(part > 0.0);
        CHECK(part <= 1.0);
        CHECK(part <= previous);  // doubling the count never prunes less
        previous = part;
      }
    }
  }
  SUBCASE("never decreased by a larger selectivity") {
    TableClustering clustering{{{"a", 13}}, std::nullopt};
    double previous = 0.0;
    for (double sel = 0.05; sel <= 1.0; sel += 0.05) {
      const auto scans =
          std::vector<ScanRecord>{scan_rec("q", 1, "t", "a", sel, 1000, uint64_t(1000 * sel), 10)};
      const double part = estimate_unprunable_part(scans, clustering, config);
      CHECK(part >= previous);
      previous = part;
    }
  }
}

TEST_CASE("absolute scan latency model") {
  ModelConfig config;
  SUBCASE("empty workload and empty scans cost nothing") {
    WorkloadSnapshot snapshot;
    snapshot.tables = {table_meta("t", 0, 0, 65535)};
    CHECK(estimate_scan_latency(snapshot, "t", {}, config) == 0.0);
    snapshot.scans = {scan_rec("q", 1, "t", "a", 1.0, 0, 0, 0)};
    CHECK(estimate_scan_latency(snapshot, "t", {}, config) == 0.0);
  }
  SUBCASE("first scan input is the unprunable table fraction") {
    WorkloadSnapshot snapshot;
    snapshot.tables = {table_meta("t", 1000, 4, 65535)};
    // The recorded input (800) is deliberately different from the table size.
    snapshot.scans = {scan_rec("q", 1, "t", "a", 0.0625, 800, 50, 123)};
    ModelConfig paid = config;
    paid.time_per_row_ns = 2.0;
    CHECK(estimate_scan_latency(snapshot, "t", {}, paid) == 2100.0);  // 2 * (1000 + 50)
  }
  SUBCASE("subsequent scans keep their recorded inputs") {
    WorkloadSnapshot snapshot;
    snapshot.tables = {table_meta("t", 1000, 4, 65535)};
    snapshot.scans = {scan_rec("q", 1, "t", "a", 0.1, 1000, 100, 10),
                      scan_rec("q", 2, "t", "b", 0.5, 100, 50, 10)};
    // 1*(1000+100) + 1*(100+50).
    CHECK(estimate_scan_latency(snapshot, "t", {}, config) == 1250.0);
  }
  SUBCASE("a sorted column shrinks the scan to its binary-search cost") {
    WorkloadSnapshot snapshot;
    snapshot.tables = {table_meta("t", 65536, 2, 65535)};
    snapshot.scans = {
        scan_rec("q", 1, "t", "a", 0.0001, 65536, 0, 10, true, /*sorted=*/true)};
    TableClustering clustering{{}, "a"};
    CHECK(estimate_scan_latency(snapshot, "t", clustering, config) == 16.0);  // log2(65536)
    // Sortedness only helps when the execution could use it.
    snapshot.scans[0].sortedness_usable = false;
    CHECK(estimate_scan_latency(snapshot, "t", clustering, config) == 65536.0);
  }
  SUBCASE("the per-chunk variant charges two probes per chunk level") {
    WorkloadSnapshot snapshot;
    snapshot.tables = {table_meta("t", 65536, 64, 1024)};
    snapshot.scans = {
        scan_rec("q", 1, "t", "a", 0.0001, 65536, 0, 10, true, /*sorted=*/true)};
    TableClustering clustering{{}, "a"};
    ModelConfig per_chunk = config;
    per_chunk.sorted_scan_per_chunk = true;
    // 2 * log2(1024) * ceil(65536/1024) = 2 * 10 * 64.
    CHECK(estimate_scan_latency(snapshot, "t", clustering, per_chunk) == 1280.0);
  }
  SUBCASE("pruning through a correlation hint shrinks the first scan") {
    WorkloadSnapshot snapshot;
    snapshot.tables = {table_meta("t", 1000, 4, 65535)};
    snapshot.scans = {scan_rec("q", 1, "t", "a", 0.08, 1000, 80, 10)};
    TableClustering clustering{{{"c", 10}}, std::nullopt};
    CHECK(estimate_scan_latency(snapshot, "t", clustering, config) == 1080.0);  // unpruned
    CorrelationHints hints;
    hints.pairs = {{"t", "c", "a"}};  // symmetric orientation
    CHECK(estimate_scan_latency(snapshot, "t", clustering, config, hints) ==
          280.0);  // 1000*0.2 + 80
  }
}

TEST_CASE("unique values per chunk and their factor") {
  SUBCASE("clustering divides the distinct values") {
    TableClustering clustering{{{"a", 3}}, std::nullopt};
    CHECK(estimate_unique_values_per_chunk(100000, clustering, "a", 65535) == 33333.0);
    CHECK(estimate_unique_values_per_chunk(15000000, clustering, "a", 65535) == 65535.0);
  }
  SUBCASE("unclustered columns cap at the chunk capacity") {
    CHECK(estimate_unique_values_per_chunk(10, {}, "a", 65535) == 10.0);
    CHECK(estimate_unique_values_per_chunk(100000, {}, "a", 65535) == 65535.0);
  }
  SUBCASE("factor interpolates between its endpoints") {
    ModelConfig config;  // unique endpoints 1.0 / 1.4
    CHECK(unique_values_factor(0, {}, "a", 1000, config) == 1.0);
    CHECK(unique_values_factor(5000, {}, "a", 1000, config) == doctest::Approx(1.4));
    CHECK(unique_values_factor(500, {}, "a", 1000, config) == doctest::Approx(1.2));
  }
}

TEST_CASE("probe-side chunk count and density factor") {
  ModelConfig config;
  const TableMeta probe_meta = table_meta("t", 200000, 10, 65535);
  SUBCASE("no predicates leave perfectly dense chunks") {
    const auto join = join_rec("q", "u", "y", "t", "a", 100000, 1, 1, 1, 1, 1, 1);
    CHECK(estimate_chunk_count(join, {}, probe_meta) == doctest::Approx(100000.0 / 65535.0));
    CHECK(density_factor(join, {}, probe_meta, config) == 1.0);
  }
  SUBCASE("predicates on unclustered columns thin the chunks out") {
    auto join = join_rec("q", "u", "y", "t", "a", 100000, 1, 1, 1, 1, 1, 1);
    join.probe_side_predicates = {{"p", 0.5}};
    CHECK(estimate_chunk_count(join, {}, probe_meta) ==
          doctest::Approx(100000.0 / (65535.0 * 0.5)));
    TableMeta two_chunks = probe_meta;
    two_chunks.chunk_count = 2;
    CHECK(estimate_chunk_count(join, {}, two_chunks) == 2.0);  // clamped to the table
  }
  SUBCASE("predicates on clustering columns keep the chunks dense") {
    auto join = join_rec("q", "u", "y", "t", "a", 100000, 1, 1, 1, 1, 1, 1);
    join.probe_side_predicates = {{"p", 0.5}};
    TableClustering clustering{{{"p", 4}}, std::nullopt};
    CHECK(estimate_chunk_count(join, clustering, probe_meta) ==
          doctest::Approx(100000.0 / 65535.0));
  }
  SUBCASE("zero density clamps to the whole table") {
    auto join = join_rec("q", "u", "y", "t", "a", 100000, 1, 1, 1, 1, 1, 1);
    join.probe_side_predicates = {{"p", 0.0}};
    CHECK(estimate_chunk_count(join, {}, probe_meta) == 10.0);
    CHECK(density_factor(join, {}, probe_meta, config) == doctest::Approx(1.5));
  }
  SUBCASE("factor interpolates over the feasible chunk range") {
    const TableMeta meta = table_meta("t", 3000, 3, 1000);
    auto join = join_rec("q", "u", "y", "t", "a", 1000, 1, 1, 1, 1, 1, 1);
    join.probe_side_predicates = {{"p", 0.5}};
    // Estimated 2 chunks in [1, 3] is the midpoint.
    CHECK(density_factor(join, {}, meta, config) == doctest::Approx(1.25));
  }
}

TEST_CASE("materialize step estimate") {
  ModelConfig config;
  WorkloadSnapshot snapshot;
  snapshot.tables = {table_meta("t", 200000, 10, 65535), table_meta("u", 1000, 1, 65535)};
  snapshot.columns = {column_meta("t", "j", 0), column_meta("t", "p", 50),
                      column_meta("u", "y", 1000)};

  SUBCASE("identical clusterings reproduce the recording exactly") {
    const auto join =
        join_rec("q", "t", "j", "u", "y", 1000, 77777, 88888, 1, 1, 1, 1, /*sorted=*/true);
    TableClustering view{{{"j", 4}}, "j"};
    CHECK(estimate_materialize_step(join, JoinSide::Build, snapshot, "t", view, view, config) ==
          77777.0);
    CHECK(estimate_materialize_step(join, JoinSide::Probe, snapshot, "u", view, view, config) ==
          88888.0);
  }
  SUBCASE("losing the sorted arrival slows the step by the sort gains") {
    const auto join = join_rec("q", "t", "j", "u", "y", 1000, 100000000, 1, 1, 1, 1, 1,
                               /*sorted=*/true);
    TableClustering current{{}, "j"};
    TableClustering candidate{{}, "p"};
    // Build column j has no distinct values recorded, so the unique factor is
    // the 1.0 endpoint and the gains are exactly the 1.3 sort factor.
    CHECK(estimate_materialize_step(join, JoinSide::Build, snapshot, "t", candidate, current,
                                    config) == doctest::Approx(130000000.0));
  }
  SUBCASE("a join on another table is carried unchanged") {
    const auto join =
        join_rec("q", "u", "y", "u", "y", 1000, 4444, 5555, 1, 1, 1, 1, /*sorted=*/true);
    TableClustering current{{}, "j"};
    CHECK(estimate_materialize_step(join, JoinSide::Build, snapshot, "t", {}, current, config) ==
          4444.0);
    CHECK(estimate_materialize_step(join, JoinSide::Probe, snapshot, "t", {}, current, config) ==
          5555.0);
  }
  SUBCASE("clustering the probe predicates repays the density penalty") {
    WorkloadSnapshot dense;
    dense.tables = {table_meta("t", 3000, 3, 1000), table_meta("u", 100, 1, 1000)};
    dense.columns = {column_meta("t", "a", 100), column_meta("t", "p", 10),
                     column_meta("u", "y", 100)};
    auto join = join_rec("q", "u", "y", "t", "a", 1000, 1, 100, 1, 1, 1, 1);
    join.probe_side_predicates = {{"p", 0.5}};
    TableClustering candidate{{{"p", 2}}, std::nullopt};
    // Current density factor 1.25 (two of three chunks), candidate 1.0.
    CHECK(estimate_materialize_step(join, JoinSide::Probe, dense, "t", candidate, {}, config) ==
          doctest::Approx(125.0));
  }
}

TEST_CASE("probe step estimate") {
  ModelConfig config;
  SUBCASE("benefit under both clusterings cancels") {
    const auto join = join_rec("q", "u", "y", "t", "a", 1000, 1, 1, 1, 1, 100000000, 1,
                               /*sorted=*/true);
    TableClustering sorted_by_a{{}, "a"};
    CHECK(estimate_probe_step(join, "t", sorted_by_a, sorted_by_a, config) == 100000000.0);
  }
  SUBCASE("benefit only under the current clustering slows the step") {
    const auto join = join_rec("q", "u", "y", "t", "a", 1000, 1, 1, 1, 1, 100000000, 1,
                               /*sorted=*/true);
    TableClustering current{{}, "a"};
    TableClustering candidate{{}, "b"};
    CHECK(estimate_probe_step(join, "t", candidate, current, config) ==
          100000000.0 * config.probe_sort_factor);
  }
  SUBCASE("benefit only under the candidate speeds the step up") {
    const auto join = join_rec("q", "u", "y", "t", "a", 1000, 1, 1, 1, 1, 120000000, 1,
                               /*sorted=*/true);
    TableClustering current{{}, "b"};
    TableClustering candidate{{}, "a"};
    CHECK(estimate_probe_step(join, "t", candidate, current, config) ==
          120000000.0 / config.probe_sort_factor);
  }
  SUBCASE("no benefit on either side leaves the recording") {
    const auto join = join_rec("q", "u", "y", "t", "a", 1000, 1, 1, 1, 1, 100000000, 1,
                               /*sorted=*/false);
    TableClustering current{{}, "a"};
    CHECK(estimate_probe_step(join, "t", {}, current, config) == 100000000.0);
    CHECK(estimate_probe_step(join, "other", {}, current, config) == 100000000.0);
  }
}

TEST_CASE("join latency composes the step estimates") {
  ModelConfig config;
  WorkloadSnapshot snapshot;
  snapshot.tables = {table_meta("t", 3000, 3, 1000), table_meta("u", 100, 1, 1000)};
  snapshot.columns = {column_meta("t", "a", 100), column_meta("t", "p", 10),
                      column_meta("u", "y", 100)};
  SUBCASE("empty workload costs nothing") {
    CHECK(estimate_join_latency(snapshot, "t", {}, {}, config) == 0.0);
  }
  SUBCASE("identity reproduces the recorded totals") {
    snapshot.joins = {join_rec("q1", "u", "y", "t", "a", 1000, 11, 22, 33, 44, 55, 66,
                               /*sorted=*/true)};
    TableClustering view{{{"a", 2}}, "a"};
    CHECK(estimate_join_latency(snapshot, "t", view, view, config) == 231.0);
  }
  SUBCASE("equals the hand-summed per-step estimates") {
    auto j1 = join_rec("q1", "u", "y", "t", "a", 1000, 11, 100, 33, 44, 5000, 66);
    j1.probe_side_predicates = {{"p", 0.5}};
    const auto j2 = join_rec("q2", "u", "y", "t", "a", 1000, 7, 8, 9, 10, 1100, 12,
                             /*sorted=*/true);
    snapshot.joins = {j1, j2};
    TableClustering current{{}, std::nullopt};
    TableClustering candidate{{{"p", 2}}, "a"};
    double expected = 0.0;
    for (const auto& join : snapshot.joins) {
      expected += estimate_materialize_step(join, JoinSide::Build, snapshot, "t", candidate,
                                            current, config);
      expected += estimate_materialize_step(join, JoinSide::Probe, snapshot, "t", candidate,
                                            current, config);
      expected += double(join.radix_ns) + double(join.build_ns);
      expected += estimate_probe_step(join, "t", candidate, current, config);
      expected += double(join.output_ns);
    }
    CHECK(estimate_join_latency(snapshot, "t", candidate, current, config) ==
          doctest::Approx(expected));
  }
}

namespace {

// A workload where pruning on column a dominates: many selective scans on a,
// one unselective scan on b, plus a join against another table.
WorkloadSnapshot ranking_snapshot() {
  WorkloadSnapshot snapshot;
  snapshot.tables = {table_meta("t", 100000, 4, 30000), table_meta("u", 1000, 1, 30000)};
  snapshot.columns = {column_meta("t", "a", 1000), column_meta("t", "b", 10),
                      column_meta("u", "y", 1000)};
  for (int q = 0; q < 5; ++q) {
    snapshot.scans.push_back(scan_rec("qa" + std::to_string(q), 1, "t", "a", 0.01, 100000, 1000,
                                      1000000, true, true));
  }
  snapshot.scans.push_back(scan_rec("qb", 1, "t", "b", 1.0, 100000, 100000, 1000));
  snapshot.scans.push_back(scan_rec("qu", 1, "u", "y", 0.5, 1000, 500, 777));
  snapshot.joins = {join_rec("qj", "u", "y", "t", "a", 1000, 10, 20, 30, 40, 50, 60)};
  return snapshot;
}

uint64_t recorded_total(const WorkloadSnapshot& snapshot) {
  uint64_t total = 0;
  for (const auto& scan : snapshot.scans) total += scan.runtime_ns;
  for (const auto& join : snapshot.joins) total += join.total_ns();
  return total;
}

WorkloadSnapshot scale_latencies(WorkloadSnapshot snapshot, uint64_t factor) {
  for (auto& scan : snapshot.scans) scan.runtime_ns *= factor;
  for (auto& join : snapshot.joins) {
    join.mat_build_ns *= factor;
    join.mat_probe_ns *= factor;
    join.radix_ns *= factor;
    join.build_ns *= factor;
    join.probe_ns *= factor;
    join.output_ns *= factor;
  }
  return snapshot;
}

}  // namespace

TEST_CASE("ranking clustering candidates") {
  ModelConfig config;
  config.max_dimensionality = 1;
  config.suggestion_count = 100;
  const WorkloadSnapshot snapshot = ranking_snapshot();

  SUBCASE("the column dominating the workload ranks first") {
    const auto suggestions = rank(snapshot, "t", config);
    // Columns {a, b} at dimensionality 1 crossed with two sort choices.
    REQUIRE(suggestions.size() == 4);
    CHECK(suggestions[0].candidate.clustering_columns == std::vector<std::string>{"a"});
    CHECK(suggestions[0].candidate.sort_column == "a");
    for (const auto& suggestion : suggestions) {
      CHECK(suggestion.estimate.total_ns ==
            suggestion.estimate.scan_ns + suggestion.estimate.join_ns +
                suggestion.estimate.carried_ns);
      CHECK(suggestion.estimate.carried_ns == 777.0);
      CHECK(suggestion.estimate.total_ns > 0.0);
      CHECK(!suggestion.counts.empty());
    }
  }
  SUBCASE("asking for more suggestions than candidates returns them all") {
    ModelConfig narrow = config;
    narrow.suggestion_count = 2;
    CHECK(rank(snapshot, "t", narrow).size() == 2);
    narrow.suggestion_count = 1000;
    CHECK(rank(snapshot, "t", narrow).size() == 4);
  }
  SUBCASE("tied estimates order deterministically by name") {
    WorkloadSnapshot flat;
    flat.tables = {table_meta("t", 1000, 2, 1000)};
    flat.columns = {column_meta("t", "a", 10), column_meta("t", "b", 10)};
    flat.scans = {scan_rec("q1", 1, "t", "a", 1.0, 1000, 1000, 5000, /*pruning=*/false),
                  scan_rec("q2", 1, "t", "b", 1.0, 1000, 1000, 5000, /*pruning=*/false)};
    const auto suggestions = rank(flat, "t", config);
    REQUIRE(suggestions.size() == 4);
    CHECK(suggestions[0].estimate.total_ns == suggestions[3].estimate.total_ns);
    CHECK(suggestions[0].candidate.clustering_columns == std::vector<std::string>{"a"});
    CHECK(suggestions[0].candidate.sort_column == "a");
    CHECK(suggestions[1].candidate.sort_column == "b");
    CHECK(suggestions[2].candidate.clustering_columns == std::vector<std::string>{"b"});
    CHECK(suggestions[2].candidate.sort_column == "a");
    CHECK(suggestions[3].candidate.sort_column == "b");
  }
  SUBCASE("a candidate matching the current clustering reproduces the recordings") {
    const InterestingColumns columns = interesting_columns(snapshot, "t");
    const ClusteringCandidate chosen{{"a"}, "a"};
    const ClusterCountSet counts =
        determine_cluster_counts(chosen, columns, snapshot, "t", config);
    const TableClustering current{counts, "a"};
    const auto suggestions = rank(snapshot, "t", config, {}, current);
    const auto match = std::find_if(suggestions.begin(), suggestions.end(), [&](const auto& s) {
      return s.candidate == chosen;
    });
    REQUIRE(match != suggestions.end());
    CHECK(match->counts == counts);
    CHECK(match->estimate.total_ns == double(recorded_total(snapshot)));
  }
  SUBCASE("scaling every recording leaves the order unchanged") {
    const auto baseline = rank(snapshot, "t", config);
    const auto scaled = rank(scale_latencies(snapshot, 7), "t", config);
    REQUIRE(baseline.size() == scaled.size());
    for (size_t i = 0; i < baseline.size(); ++i) {
      CHECK(baseline[i].candidate == scaled[i].candidate);
      CHECK(scaled[i].estimate.total_ns == doctest::Approx(7.0 * baseline[i].estimate.total_ns));
    }
  }
  SUBCASE("bad configs and bad hints are rejected") {
    ModelConfig bad = config;
    bad.unique_high = 0.5;
    CHECK_THROWS_AS(rank(snapshot, "t", bad), std::invalid_argument);
    bad = config;
    bad.time_per_row_ns = 0.0;
    CHECK_THROWS_AS(rank(snapshot, "t", bad), std::invalid_argument);
    CorrelationHints hints;
    hints.pairs = {{"t", "a", "ghost"}};
    CHECK_THROWS_AS(rank(snapshot, "t", config, hints), std::invalid_argument);
    CHECK_THROWS_AS(rank(snapshot, "missing", config), std::invalid_argument);
  }
  SUBCASE("the metadata sort column anchors the default current clustering") {
    WorkloadSnapshot sorted_snapshot = snapshot;
    sorted_snapshot.columns[0].sorted_by = true;  // t.a
    const TableClustering current = current_clustering_from_meta(sorted_snapshot, "t");
    CHECK(current.sort_column == "a");
    CHECK(current.counts.empty());
    CHECK(!current_clustering_from_meta(snapshot, "t").sort_column);
  }
}

TEST_CASE("estimate quality metrics") {
  SUBCASE("relative error divides measured by estimated") {
    CHECK(relative_error(50.0, 100.0) == 0.5);
    CHECK(relative_error(100.0, 50.0) == 2.0);
    CHECK_THROWS_AS(relative_error(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(relative_error(1.0, -2.0), std::invalid_argument);
  }
  SUBCASE("mse averages the squared differences") {
    CHECK(mse({10.0, 20.0}, {10.0, 20.0}) == 0.0);
    CHECK(mse({10.0, 20.0}, {10.0, 10.0}) == 50.0);
    CHECK_THROWS_AS(mse({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(mse({1.0}, {1.0, 2.0}), std::invalid_argument);
  }
  SUBCASE("smape is symmetric and bounded") {
    CHECK(smape({10.0, 20.0}, {10.0, 20.0}) == 0.0);
    CHECK(smape({10.0, 20.0}, {10.0, 10.0}) == doctest::Approx(100.0 / 3.0));
    CHECK(smape({0.0}, {0.0}) == 0.0);        // 0/0 terms count as zero
    CHECK(smape({0.0}, {5.0}) == 200.0);      // upper bound
    CHECK(smape({5.0}, {0.0}) == 200.0);
    CHECK_THROWS_AS(smape({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(smape({1.0}, {}), std::invalid_argument);
    for (int i = 0; i < 50; ++i) {
      const double a = 1.0 + 13.7 * i;
      const double b = 500.0 - 9.3 * i;
      const double value = smape({a}, {b});
      CHECK(value >= 0.0);
      CHECK(value <= 200.0);
    }
  }
}

namespace {

WorkloadSnapshot calibration_snapshot(double time_per_row, uint64_t probe_ns,
                                      bool arrives_sorted) {
  WorkloadSnapshot snapshot;
  snapshot.tables = {table_meta("t", 100000, 10, 10000), table_meta("u", 1000, 1, 10000)};
  snapshot.columns = {column_meta("t", "a", 1000), column_meta("t", "b", 100),
                      column_meta("u", "y", 1000)};
  for (uint32_t q = 0; q < 6; ++q) {
    const uint64_t input = 1000 * (q + 1);
    const uint64_t output = input / 2;
    const auto runtime = uint64_t(time_per_row * (input + output));
    snapshot.scans.push_back(
        scan_rec("q" + std::to_string(q), 1, "t", "a", 0.5, input, output, runtime));
  }
  snapshot.joins = {join_rec("qj", "u", "y", "t", "a", 1000, 500, 600, 700, 800, probe_ns, 900,
                             arrives_sorted)};
  return snapshot;
}

}  // namespace

TEST_CASE("model calibration") {
  SUBCASE("needs at least two runs over one query set") {
    const CalibrationRun solo{calibration_snapshot(2.0, 1000, false), {}};
    CHECK_THROWS_AS(calibrate({solo}, "t"), std::invalid_argument);
    CalibrationRun different{calibration_snapshot(2.0, 1000, false), {}};
    different.snapshot.scans.pop_back();
    CHECK_THROWS_AS(calibrate({solo, different}, "t"), std::invalid_argument);
  }
  SUBCASE("recovers the per-row scan cost from exact recordings") {
    const CalibrationRun a{calibration_snapshot(3.5, 1000, false), {}};
    const CalibrationRun b{calibration_snapshot(3.5, 1000, false), {}};
    const ModelConfig fitted = calibrate({a, b}, "t");
    CHECK(fitted.time_per_row_ns == doctest::Approx(3.5).epsilon(0.01));
  }
  SUBCASE("an identical pair fits every factor to the neutral endpoint") {
    const CalibrationRun a{calibration_snapshot(2.0, 1000, true), TableClustering{{}, "a"}};
    const CalibrationRun b = a;
    const ModelConfig fitted = calibrate({a, b}, "t");
    CHECK(fitted.probe_sort_factor == 1.0);
    CHECK(fitted.mat_sort_factor == 1.0);
    CHECK(fitted.unique_high == 1.0);
    CHECK(fitted.density_high == 1.0);
    CHECK(fitted.unique_low == 1.0);
    CHECK(fitted.density_low == 1.0);
  }
  SUBCASE("recovers the probe sort factor from a sorted/unsorted pair") {
    // Run A enjoys sorted arrival on the probe column; run B does not and its
    // probe step is 1.35x slower, exactly the factor to recover.
    const CalibrationRun a{calibration_snapshot(2.0, 2000000, true), TableClustering{{}, "a"}};
    const CalibrationRun b{calibration_snapshot(2.0, 2700000, false), TableClustering{{}, "b"}};
    const ModelConfig fitted = calibrate({a, b}, "t");
    CHECK(fitted.probe_sort_factor == doctest::Approx(1.35));
  }
  SUBCASE("deterministic across repeated invocations") {
    const CalibrationRun a{calibration_snapshot(2.0, 2000000, true), TableClustering{{}, "a"}};
    const CalibrationRun b{calibration_snapshot(1.9, 2500000, false), TableClustering{{}, "b"}};
    const ModelConfig first = calibrate({a, b}, "t");
    const ModelConfig second = calibrate({a, b}, "t");
    CHECK(first.time_per_row_ns == second.time_per_row_ns);
    CHECK(first.probe_sort_factor == second.probe_sort_factor);
    CHECK(first.unique_high == second.unique_high);
    CHECK(first.density_high == second.density_high);
    CHECK(first.mat_sort_factor == second.mat_sort_factor);
  }
}

TEST_CASE("advisor exports") {
  const auto dir = std::filesystem::temp_directory_path() / "strata_advisor_csv";
  std::filesystem::create_directories(dir);
  SUBCASE("suggestions carry ranks, counts, and estimate parts") {
    Suggestion s;
    s.candidate = {{"a", "b"}, "a"};
    s.counts = {{"a", 3}, {"b", 100}};
    s.estimate = {1.5, 2.5, 3.0, 7.0};
    const auto path = (dir / "suggestions.csv").string();
    export_suggestions_csv({s}, path);
    const auto lines = read_lines_of(path);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] ==
          "rank,clustering_columns,cluster_counts,sort_column,scan_ns,join_ns,carried_ns,"
          "total_ns");
    CHECK(lines[1] == "1,a;b,a:3;b:100,a,1.5,2.5,3,7");
  }
  SUBCASE("evaluation rows end with the summary metrics") {
    std::vector<EvaluationRow> rows;
    rows.push_back({"scan", "q1", 10.0, 10.0});
    rows.push_back({"probe", "q2", 20.0, 10.0});
    const auto path = (dir / "evaluation.csv").string();
    export_evaluation_csv(rows, path);
    const auto lines = read_lines_of(path);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "op,query_id,measured_ns,estimated_ns,relative_error");
    CHECK(lines[1] == "scan,q1,10,10,1");
    CHECK(lines[2] == "probe,q2,20,10,2");
    CHECK(lines[3] == "mse,all,,,50");
    const auto smape_line = lines[4];
    CHECK(smape_line.rfind("smape,all,,,", 0) == 0);
    CHECK(std::stod(smape_line.substr(12)) == doctest::Approx(100.0 / 3.0));
  }
  SUBCASE("an estimate of zero leaves the relative error blank") {
    std::vector<EvaluationRow> rows;
    rows.push_back({"scan", "q1", 10.0, 0.0});
    const auto path = (dir / "evaluation_zero.csv").string();
    export_evaluation_csv(rows, path);
    const auto lines = read_lines_of(path);
    REQUIRE(lines.size() == 4);
    CHECK(lines[1] == "scan,q1,10,0,");
  }
}
