#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

#include "strata/datagen.hpp"
#include "strata/mvcc.hpp"
#include "strata/table_io.hpp"
#include "strata/types.hpp"
#include "test_support.hpp"

using namespace strata;

namespace {

// Serialized visible rows (unit-separator joined), unsorted.
std::vector<std::string> visible_row_keys(Table& table, const TransactionContext& ctx) {
  std::vector<std::string> out;
  const auto chunks = table.chunk_snapshot();
  for (ChunkId chunk_id = 0; chunk_id < chunks.size(); ++chunk_id) {
    const auto& chunk = chunks[chunk_id];
    if (!chunk) continue;
    for (ChunkOffset offset = 0; offset < chunk->size(); ++offset) {
      if (!ctx.sees(chunk->row_meta(offset), RowLocation{&table, chunk_id, offset})) continue;
      std::string key;
      for (ColumnId col = 0; col < table.schema().column_count(); ++col) {
        const Value v = chunk->segment(col)->value_at(offset);
        key += is_null(v) ? std::string{"\x01"} : value_to_string(v);
        key += '\x1f';
      }
      out.push_back(std::move(key));
    }
  }
  return out;
}

std::vector<std::string> sorted_row_multiset(Table& table, TransactionManager& tm) {
  const auto ctx = tm.begin_transaction();
  auto keys = visible_row_keys(table, *ctx);
  tm.abort(*ctx);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string temp_dir() {
  static int counter = 0;
  const auto dir =
      std::filesystem::temp_directory_path() / ("strata_io_test_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

const char* kMixedSpec = R"({
  "table": "orders",
  "rows": 5000,
  "chunk_capacity": 1000,
  "columns": [
    {"name": "base", "distribution": "uniform_int", "min": 0, "max": 2499},
    {"name": "shipped", "distribution": "date_range", "start": "1992-01-01", "end": "1998-12-31"},
    {"name": "received", "distribution": "derived", "base": "shipped", "offset_window": 30},
    {"name": "bumped", "distribution": "derived", "base": "base", "offset_window": 30},
    {"name": "flag", "distribution": "categorical", "categories": 25},
    {"name": "rank", "distribution": "zipf", "min": 1, "max": 20, "skew": 0.0}
  ]
})";

}  // namespace

TEST_CASE("date serial conversions") {
  CHECK(date_to_days("1970-01-01") == 0);
  CHECK(date_to_days("1970-01-02") == 1);
  CHECK(date_to_days("1969-12-31") == -1);
  CHECK(days_to_date(0) == "1970-01-01");
  CHECK(days_to_date(date_to_days("1996-02-29")) == "1996-02-29");
  // 1992-01-01 .. 1998-12-31 spans two leap years: 2*366 + 5*365 - 1 days apart.
  CHECK(date_to_days("1998-12-31") - date_to_days("1992-01-01") == 2556);
  CHECK(date_to_days("2000-02-29") == date_to_days("2000-02-28") + 1);
  CHECK_THROWS_AS(date_to_days("2001-02-29"), std::invalid_argument);
  CHECK_THROWS_AS(date_to_days("1992/01/01"), std::invalid_argument);
  CHECK_THROWS_AS(date_to_days("92-01-01"), std::invalid_argument);
  CHECK_THROWS_AS(date_to_days("1992-13-01"), std::invalid_argument);
  CHECK_THROWS_AS(date_to_days(""), std::invalid_argument);
}

TEST_CASE("generator spec parsing") {
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  CHECK(spec.table == "orders");
  CHECK(spec.row_count == 5000);
  CHECK(spec.chunk_capacity == 1000);
  CHECK_FALSE(spec.sort_by.has_value());
  REQUIRE(spec.columns.size() == 6);
  CHECK(spec.columns[0].kind == DistributionKind::UniformInt);
  CHECK(spec.columns[0].max_value == 2499);
  CHECK(spec.columns[2].kind == DistributionKind::Derived);
  CHECK(spec.columns[2].base_column == "shipped");
  CHECK(spec.columns[2].offset_window == 30);
  CHECK(spec.columns[4].categories == 25);

  const TableSchema schema = datagen_schema(spec);
  CHECK(schema.column(0).type == DataType::Int64);
  CHECK(schema.column(1).type == DataType::Date);
  CHECK(schema.column(2).type == DataType::Date);  // derived inherits the base type
  CHECK(schema.column(3).type == DataType::Int64);
  CHECK(schema.column(4).type == DataType::String);
  CHECK(schema.column(5).type == DataType::Int64);

  CHECK_THROWS_AS(parse_datagen_spec("not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":0,"columns":[
    {"name":"a","distribution":"uniform_int","min":0,"max":1}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"columns":[
    {"name":"a","distribution":"gaussian"}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"columns":[
    {"name":"a","distribution":"uniform_int","min":9,"max":1}]})"),
                  std::invalid_argument);
  // Derived must reference an earlier column, and one of integer or date type.
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"columns":[
    {"name":"d","distribution":"derived","base":"a","offset_window":3},
    {"name":"a","distribution":"uniform_int","min":0,"max":1}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"columns":[
    {"name":"c","distribution":"categorical","categories":4},
    {"name":"d","distribution":"derived","base":"c","offset_window":3}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"columns":[
    {"name":"a","distribution":"uniform_int","min":0,"max":1},
    {"name":"a","distribution":"uniform_int","min":0,"max":1}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"sort_by":"zz","columns":[
    {"name":"a","distribution":"uniform_int","min":0,"max":1}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"columns":[
    {"name":"c","distribution":"categorical","categories":0}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_datagen_spec(R"({"table":"t","rows":5,"columns":[
    {"name":"d","distribution":"date_range","start":"1999-01-01","end":"1992-01-01"}]})"),
                  std::invalid_argument);
}

TEST_CASE("generation is deterministic per seed") {
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  const auto a = generate_rows(spec, 42);
  const auto b = generate_rows(spec, 42);
  REQUIRE(a.size() == 5000);
  CHECK(a == b);
  const auto c = generate_rows(spec, 43);
  CHECK(a != c);
}

TEST_CASE("derived columns stay inside the offset window") {
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  const auto rows = generate_rows(spec, 7);
  for (const auto& row : rows) {
    const int64_t days_apart =
        date_to_days(std::get<std::string>(row[2])) - date_to_days(std::get<std::string>(row[1]));
    CHECK(days_apart >= 1);
    CHECK(days_apart <= 30);
    const int64_t int_apart = std::get<int64_t>(row[3]) - std::get<int64_t>(row[0]);
    CHECK(int_apart >= 1);
    CHECK(int_apart <= 30);
  }
}

TEST_CASE("zipf with zero skew degenerates to uniform") {
  // rank is zipf(1..20, skew 0) over 5000 rows in kMixedSpec: expected 250
  // per value. Chi-squared against uniform with 19 degrees of freedom; the
  // alpha = 0.001 critical value is 43.82.
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  const auto rows = generate_rows(spec, 1234);
  std::map<int64_t, uint64_t> counts;
  for (const auto& row : rows) ++counts[std::get<int64_t>(row[5])];
  CHECK(counts.size() == 20);
  double chi2 = 0.0;
  const double expected = 5000.0 / 20.0;
  for (int64_t v = 1; v <= 20; ++v) {
    const double diff = static_cast<double>(counts[v]) - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 43.82);
}

TEST_CASE("zipf skew concentrates mass on low ranks") {
  DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  spec.columns[5].skew = 1.2;
  const auto rows = generate_rows(spec, 99);
  std::map<int64_t, uint64_t> counts;
  for (const auto& row : rows) ++counts[std::get<int64_t>(row[5])];
  CHECK(counts[1] > 5 * std::max<uint64_t>(counts[20], 1));
  CHECK(counts[1] > counts[2]);
}

TEST_CASE("categorical labels are dense and fixed-width") {
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  const auto rows = generate_rows(spec, 5);
  std::map<std::string, uint64_t> seen;
  for (const auto& row : rows) ++seen[std::get<std::string>(row[4])];
  CHECK(seen.size() == 25);  // 5000 rows over 25 labels: every label appears
  for (const auto& [label, count] : seen) {
    CHECK(label.size() == std::string{"cat_00"}.size());
    CHECK(label.substr(0, 4) == "cat_");
  }
  CHECK(seen.begin()->first == "cat_00");
  CHECK(std::prev(seen.end())->first == "cat_24");
}

TEST_CASE("sort_by emits globally sorted rows and marks chunks") {
  DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  spec.sort_by = "base";
  const auto rows = generate_rows(spec, 11);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::get<int64_t>(rows[i - 1][0]) <= std::get<int64_t>(rows[i][0]));
  }

  TransactionManager tm;
  const auto table = generate_table(spec, tm, 11);
  CHECK(table->chunk_capacity() == 1000);
  CHECK(table->physical_row_count() == 5000);
  const ColumnId base_id = table->schema().column_id("base");
  uint32_t non_empty = 0;
  for (ChunkId id = 0; id < table->chunk_count(); ++id) {
    const auto chunk = table->chunk(id);
    if (!chunk || chunk->size() == 0) continue;
    ++non_empty;
    REQUIRE(chunk->sort_column().has_value());
    CHECK(*chunk->sort_column() == base_id);
  }
  CHECK(non_empty >= 5);

  const auto ctx = tm.begin_transaction();
  CHECK(visible_row_keys(*table, *ctx).size() == 5000);
  tm.abort(*ctx);
}

TEST_CASE("generated table round-trips through CSV and sidecar") {
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  TransactionManager tm;
  const auto table = generate_table(spec, tm, 21);
  const std::string dir = temp_dir();
  const std::string path = dir + "/orders.csv";

  const auto export_ctx = tm.begin_transaction();
  export_table_csv(*table, *export_ctx, path);
  tm.abort(*export_ctx);
  CHECK(std::filesystem::exists(path));
  CHECK(std::filesystem::exists(table_sidecar_path(path)));

  TransactionManager tm2;
  const auto loaded = import_table_csv(tm2, path);
  CHECK(loaded->chunk_capacity() == 1000);
  REQUIRE(loaded->schema().column_count() == table->schema().column_count());
  for (ColumnId col = 0; col < table->schema().column_count(); ++col) {
    CHECK(loaded->schema().column(col).name == table->schema().column(col).name);
    CHECK(loaded->schema().column(col).type == table->schema().column(col).type);
    CHECK(loaded->schema().column(col).nullable == table->schema().column(col).nullable);
  }
  CHECK(sorted_row_multiset(*loaded, tm2) == sorted_row_multiset(*table, tm));
}

TEST_CASE("sorted table keeps verified sort markers through a round trip") {
  DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  spec.sort_by = "base";
  TransactionManager tm;
  const auto table = generate_table(spec, tm, 31);
  const std::string path = temp_dir() + "/sorted.csv";
  const auto ctx = tm.begin_transaction();
  export_table_csv(*table, *ctx, path);
  tm.abort(*ctx);

  TransactionManager tm2;
  const auto loaded = import_table_csv(tm2, path);
  const ColumnId base_id = loaded->schema().column_id("base");
  for (ChunkId id = 0; id < loaded->chunk_count(); ++id) {
    const auto chunk = loaded->chunk(id);
    if (!chunk || chunk->size() == 0) continue;
    REQUIRE(chunk->sort_column().has_value());
    CHECK(*chunk->sort_column() == base_id);
  }
}

TEST_CASE("declared sort columns are verified, not trusted") {
  // Unsorted data with a sort marker forced onto one chunk: the sidecar
  // declares the column, but the importer must only mark chunks whose rows
  // actually arrive in order.
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  TransactionManager tm;
  const auto table = generate_table(spec, tm, 77);
  const ColumnId base_id = table->schema().column_id("base");
  table->chunk(0)->set_sort_column(base_id);

  const std::string path = temp_dir() + "/claimed.csv";
  const auto ctx = tm.begin_transaction();
  export_table_csv(*table, *ctx, path);
  tm.abort(*ctx);

  TransactionManager tm2;
  const auto loaded = import_table_csv(tm2, path);
  for (ChunkId id = 0; id < loaded->chunk_count(); ++id) {
    const auto chunk = loaded->chunk(id);
    if (!chunk || chunk->size() == 0 || !chunk->sort_column().has_value()) continue;
    const auto segment = chunk->segment(*chunk->sort_column());
    for (ChunkOffset offset = 1; offset < chunk->size(); ++offset) {
      CHECK(value_compare(segment->value_at(offset - 1), segment->value_at(offset)) <= 0);
    }
  }
}

TEST_CASE("nulls and tricky strings survive the round trip") {
  TableSchema schema{{{"id", DataType::Int64, false},
                      {"note", DataType::String, true},
                      {"tag", DataType::String, false}}};
  auto table = std::make_shared<Table>(schema, 4);
  TransactionManager tm;
  testing::insert_committed(tm, *table,
                            {{int64_t{1}, std::string{"plain"}, std::string{"x"}},
                             {int64_t{2}, std::monostate{}, std::string{""}},
                             {int64_t{3}, std::string{"comma, inside"}, std::string{"q\"uote"}},
                             {int64_t{4}, std::string{"line\nbreak"}, std::string{",\",\n"}},
                             {int64_t{5}, std::string{""}, std::string{"y"}}});

  const std::string path = temp_dir() + "/tricky.csv";
  const auto ctx = tm.begin_transaction();
  export_table_csv(*table, *ctx, path);
  tm.abort(*ctx);

  TransactionManager tm2;
  const auto loaded = import_table_csv(tm2, path);
  CHECK(sorted_row_multiset(*loaded, tm2) == sorted_row_multiset(*table, tm));

  // NULL and empty string are distinct: row 2's note is NULL, row 5's is "".
  const auto check_ctx = tm2.begin_transaction();
  uint64_t nulls = 0, empty_notes = 0;
  const auto chunks = loaded->chunk_snapshot();
  for (ChunkId chunk_id = 0; chunk_id < chunks.size(); ++chunk_id) {
    const auto& chunk = chunks[chunk_id];
    if (!chunk) continue;
    for (ChunkOffset offset = 0; offset < chunk->size(); ++offset) {
      if (!check_ctx->sees(chunk->row_meta(offset), RowLocation{loaded.get(), chunk_id, offset})) {
        continue;
      }
      const Value note = chunk->segment(1)->value_at(offset);
      if (is_null(note)) ++nulls;
      else if (std::get<std::string>(note).empty()) ++empty_notes;
    }
  }
  tm2.abort(*check_ctx);
  CHECK(nulls == 1);
  CHECK(empty_notes == 1);
}

TEST_CASE("import honors a chunk-capacity override") {
  const DataGenSpec spec = parse_datagen_spec(kMixedSpec);
  TransactionManager tm;
  const auto table = generate_table(spec, tm, 3);
  const std::string path = temp_dir() + "/override.csv";
  const auto ctx = tm.begin_transaction();
  export_table_csv(*table, *ctx, path);
  tm.abort(*ctx);

  TransactionManager tm2;
  const auto loaded = import_table_csv(tm2, path, 250);
  CHECK(loaded->chunk_capacity() == 250);
  CHECK(loaded->physical_row_count() == 5000);
  CHECK(sorted_row_multiset(*loaded, tm2) == sorted_row_multiset(*table, tm));
}

TEST_CASE("import rejects malformed inputs") {
  TransactionManager tm;
  CHECK_THROWS_AS(import_table_csv(tm, "/nonexistent/no.csv"), std::runtime_error);

  const std::string dir = temp_dir();
  const auto write = [](const std::string& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
  };

  // Sidecar present but header does not match the declared schema.
  write(dir + "/bad_header.csv", "x,y\n1,2\n");
  write(dir + "/bad_header.csv.meta.json",
        R"({"schema":[{"name":"a","type":"int64"},{"name":"b","type":"int64"}],"chunk_capacity":10})");
  CHECK_THROWS_AS(import_table_csv(tm, dir + "/bad_header.csv"), std::runtime_error);

  // Record with the wrong number of fields.
  write(dir + "/bad_width.csv", "a,b\n1,2\n3\n");
  write(dir + "/bad_width.csv.meta.json",
        R"({"schema":[{"name":"a","type":"int64"},{"name":"b","type":"int64"}],"chunk_capacity":10})");
  CHECK_THROWS_AS(import_table_csv(tm, dir + "/bad_width.csv"), std::runtime_error);

  // Empty field for a non-nullable integer column.
  write(dir + "/bad_null.csv", "a,b\n1,\n");
  write(dir + "/bad_null.csv.meta.json",
        R"({"schema":[{"name":"a","type":"int64"},{"name":"b","type":"int64"}],"chunk_capacity":10})");
  CHECK_THROWS_AS(import_table_csv(tm, dir + "/bad_null.csv"), std::runtime_error);

  // Unknown type name in the sidecar.
  write(dir + "/bad_type.csv", "a\n1\n");
  write(dir + "/bad_type.csv.meta.json",
        R"({"schema":[{"name":"a","type":"decimal"}],"chunk_capacity":10})");
  CHECK_THROWS_AS(import_table_csv(tm, dir + "/bad_type.csv"), std::runtime_error);
}
