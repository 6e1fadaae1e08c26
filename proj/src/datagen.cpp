#include "strata/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace strata {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw std::invalid_argument(message); }

DistributionKind kind_from_name(const std::string& name) {
  if (name == "uniform_int") return DistributionKind::UniformInt;
  if (name == "zipf") return DistributionKind::Zipf;
  if (name == "date_range") return DistributionKind::DateRange;
  if (name == "categorical") return DistributionKind::Categorical;
  if (name == "derived") return DistributionKind::Derived;
  fail("unknown distribution: " + name);
}

DataType column_output_type(const DataGenSpec& spec, size_t index);

DataType base_column_type(const DataGenSpec& spec, const ColumnGenSpec& column) {
  for (size_t i = 0; i < spec.columns.size(); ++i) {
    if (spec.columns[i].name == column.base_column) return column_output_type(spec, i);
  }
  fail("derived column " + column.name + " references unknown base " + column.base_column);
}

DataType column_output_type(const DataGenSpec& spec, size_t index) {
  const ColumnGenSpec& column = spec.columns[index];
  switch (column.kind) {
    case DistributionKind::UniformInt:
    case DistributionKind::Zipf:
      return DataType::Int64;
    case DistributionKind::DateRange:
      return DataType::Date;
    case DistributionKind::Categorical:
      return DataType::String;
    case DistributionKind::Derived:
      return base_column_type(spec, column);
  }
  fail("unreachable column kind");
}

void validate_spec(const DataGenSpec& spec) {
  if (spec.table.empty()) fail("table name is empty");
  if (spec.row_count == 0) fail("rows must be positive");
  if (spec.chunk_capacity == 0) fail("chunk_capacity must be positive");
  if (spec.columns.empty()) fail("spec declares no columns");

  std::unordered_map<std::string, size_t> seen;
  for (size_t i = 0; i < spec.columns.size(); ++i) {
    const ColumnGenSpec& column = spec.columns[i];
    if (column.name.empty()) fail("column name is empty");
    if (!seen.emplace(column.name, i).second) fail("duplicate column name: " + column.name);
    switch (column.kind) {
      case DistributionKind::UniformInt:
        if (column.min_value > column.max_value) fail(column.name + ": min exceeds max");
        break;
      case DistributionKind::Zipf: {
        if (column.min_value > column.max_value) fail(column.name + ": min exceeds max");
        if (column.skew < 0) fail(column.name + ": skew must be non-negative");
        const uint64_t range =
            static_cast<uint64_t>(column.max_value - column.min_value) + 1;
        if (range > uint64_t{1} << 24) fail(column.name + ": zipf range too large");
        break;
      }
      case DistributionKind::DateRange:
        if (date_to_days(column.start_date) > date_to_days(column.end_date)) {
          fail(column.name + ": start date after end date");
        }
        break;
      case DistributionKind::Categorical:
        if (column.categories == 0) fail(column.name + ": categories must be positive");
        break;
      case DistributionKind::Derived: {
        if (column.offset_window < 1) fail(column.name + ": offset_window must be >= 1");
        const auto base = seen.find(column.base_column);
        if (base == seen.end() || base->second >= i) {
          fail("derived column " + column.name + " must reference an earlier column");
        }
        const DataType base_type = column_output_type(spec, base->second);
        if (base_type != DataType::Int64 && base_type != DataType::Date) {
          fail("derived column " + column.name + " needs an integer or date base");
        }
        break;
      }
    }
  }
  if (spec.sort_by && !seen.count(*spec.sort_by)) fail("sort_by names unknown column: " + *spec.sort_by);
}

std::string categorical_label(uint32_t index, uint32_t categories) {
  int width = 1;
  for (uint32_t v = categories - 1; v >= 10; v /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof buf, "cat_%0*u", width, index);
  return buf;
}

std::vector<Value> generate_column(const DataGenSpec& spec, const ColumnGenSpec& column,
                                   const std::vector<std::vector<Value>>& generated,
                                   const std::unordered_map<std::string, size_t>& index_of,
                                   std::mt19937_64& engine) {
  const uint64_t n = spec.row_count;
  std::vector<Value> out;
  out.reserve(n);
  switch (column.kind) {
    case DistributionKind::UniformInt: {
      std::uniform_int_distribution<int64_t> dist(column.min_value, column.max_value);
      for (uint64_t i = 0; i < n; ++i) out.emplace_back(dist(engine));
      break;
    }
    case DistributionKind::Zipf: {
      // Inverse-CDF sampling over explicit rank weights 1/r^skew; skew 0
      // makes every weight 1 and the draw uniform.
      const uint64_t range = static_cast<uint64_t>(column.max_value - column.min_value) + 1;
      std::vector<double> cumulative(range);
      double total = 0.0;
      for (uint64_t r = 0; r < range; ++r) {
        total += std::pow(static_cast<double>(r + 1), -column.skew);
        cumulative[r] = total;
      }
      std::uniform_real_distribution<double> dist(0.0, total);
      for (uint64_t i = 0; i < n; ++i) {
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), dist(engine));
        const uint64_t rank = std::min<uint64_t>(it - cumulative.begin(), range - 1);
        out.emplace_back(column.min_value + static_cast<int64_t>(rank));
      }
      break;
    }
    case DistributionKind::DateRange: {
      std::uniform_int_distribution<int64_t> dist(date_to_days(column.start_date),
                                                  date_to_days(column.end_date));
      for (uint64_t i = 0; i < n; ++i) out.emplace_back(days_to_date(dist(engine)));
      break;
    }
    case DistributionKind::Categorical: {
      std::uniform_int_distribution<uint32_t> dist(0, column.categories - 1);
      for (uint64_t i = 0; i < n; ++i) {
        out.emplace_back(categorical_label(dist(engine), column.categories));
      }
      break;
    }
    case DistributionKind::Derived: {
      const std::vector<Value>& base = generated[index_of.at(column.base_column)];
      std::uniform_int_distribution<int64_t> dist(1, column.offset_window);
      const bool date_base = std::holds_alternative<std::string>(base.front());
      for (uint64_t i = 0; i < n; ++i) {
        const int64_t offset = dist(engine);
        if (date_base) {
          out.emplace_back(days_to_date(date_to_days(std::get<std::string>(base[i])) + offset));
        } else {
          out.emplace_back(std::get<int64_t>(base[i]) + offset);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace

int64_t date_to_days(const std::string& date) {
  const auto bad = [&]() { fail("invalid date: " + date); };
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') bad();
  for (const size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(date[i]))) bad();
  }
  const int year = std::stoi(date.substr(0, 4));
  const unsigned month = static_cast<unsigned>(std::stoi(date.substr(5, 2)));
  const unsigned day = static_cast<unsigned>(std::stoi(date.substr(8, 2)));
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) bad();
  return std::chrono::sys_days(ymd).time_since_epoch().count();
}

std::string days_to_date(int64_t days) {
  const std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{days}}};
  if (!ymd.ok()) fail("day count out of calendar range: " + std::to_string(days));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

DataGenSpec parse_datagen_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string{"malformed generator spec: "} + e.what());
  }
  if (!doc.is_object()) fail("generator spec must be a JSON object");

  DataGenSpec spec;
  try {
    spec.table = doc.at("table").get<std::string>();
    spec.row_count = doc.at("rows").get<uint64_t>();
    spec.chunk_capacity = doc.value("chunk_capacity", kDefaultChunkCapacity);
    if (doc.contains("sort_by")) spec.sort_by = doc["sort_by"].get<std::string>();
    for (const json& entry : doc.at("columns")) {
      ColumnGenSpec column;
      column.name = entry.at("name").get<std::string>();
      column.kind = kind_from_name(entry.at("distribution").get<std::string>());
      switch (column.kind) {
        case DistributionKind::UniformInt:
          column.min_value = entry.at("min").get<int64_t>();
          column.max_value = entry.at("max").get<int64_t>();
          break;
        case DistributionKind::Zipf:
          column.min_value = entry.at("min").get<int64_t>();
          column.max_value = entry.at("max").get<int64_t>();
          column.skew = entry.value("skew", 0.0);
          break;
        case DistributionKind::DateRange:
          column.start_date = entry.at("start").get<std::string>();
          column.end_date = entry.at("end").get<std::string>();
          break;
        case DistributionKind::Categorical:
          column.categories = entry.at("categories").get<uint32_t>();
          break;
        case DistributionKind::Derived:
          column.base_column = entry.at("base").get<std::string>();
          column.offset_window = entry.at("offset_window").get<int64_t>();
          break;
      }
      spec.columns.push_back(std::move(column));
    }
  } catch (const json::exception& e) {
    fail(std::string{"generator spec field error: "} + e.what());
  }
  validate_spec(spec);
  return spec;
}

DataGenSpec load_datagen_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open generator spec: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_datagen_spec(text.str());
}

TableSchema datagen_schema(const DataGenSpec& spec) {
  validate_spec(spec);
  std::vector<ColumnDefinition> columns;
  for (size_t i = 0; i < spec.columns.size(); ++i) {
    columns.push_back({spec.columns[i].name, column_output_type(spec, i), false});
  }
  return TableSchema(std::move(columns));
}

std::vector<std::vector<Value>> generate_rows(const DataGenSpec& spec, uint64_t seed) {
  validate_spec(spec);
  std::mt19937_64 engine(seed);

  std::unordered_map<std::string, size_t> index_of;
  for (size_t i = 0; i < spec.columns.size(); ++i) index_of.emplace(spec.columns[i].name, i);

  std::vector<std::vector<Value>> columns;
  columns.reserve(spec.columns.size());
  for (const ColumnGenSpec& column : spec.columns) {
    columns.push_back(generate_column(spec, column, columns, index_of, engine));
  }

  std::vector<uint64_t> order(spec.row_count);
  std::iota(order.begin(), order.end(), 0);
  if (spec.sort_by) {
    const std::vector<Value>& key = columns[index_of.at(*spec.sort_by)];
    std::stable_sort(order.begin(), order.end(),
                     [&](uint64_t a, uint64_t b) { return value_less(key[a], key[b]); });
  }

  std::vector<std::vector<Value>> rows;
  rows.reserve(spec.row_count);
  for (const uint64_t r : order) {
    std::vector<Value> row;
    row.reserve(columns.size());
    for (std::vector<Value>& column : columns) row.push_back(std::move(column[r]));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::shared_ptr<Table> generate_table(const DataGenSpec& spec, TransactionManager& tm,
                                      uint64_t seed) {
  const TableSchema schema = datagen_schema(spec);
  auto rows = generate_rows(spec, seed);
  auto table = std::make_shared<Table>(schema, spec.chunk_capacity);

  const auto ctx = tm.begin_transaction();
  constexpr size_t kBatchRows = 16384;
  std::vector<std::vector<Value>> batch;
  batch.reserve(std::min<size_t>(kBatchRows, rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    batch.push_back(std::move(rows[i]));
    if (batch.size() >= kBatchRows || i + 1 == rows.size()) {
      tm.insert_rows(*ctx, *table, batch);
      batch.clear();
    }
  }
  tm.commit(*ctx);

  const ColumnId sort_id = spec.sort_by ? schema.column_id(*spec.sort_by) : kInvalidColumnId;
  for (ChunkId id = 0; id < table->chunk_count(); ++id) {
    const auto chunk = table->chunk(id);
    if (!chunk) continue;
    if (chunk->size() == chunk->capacity()) chunk->finalize();
    if (sort_id != kInvalidColumnId && chunk->size() > 0) chunk->set_sort_column(sort_id);
  }
  return table;
}

}  // namespace strata
