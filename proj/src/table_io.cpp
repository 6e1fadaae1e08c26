#include "strata/table_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "strata/csv.hpp"

namespace strata {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// Splits CSV text into records at newlines outside quoted fields (quote
/// parity; doubled quotes inside a field contribute an even count).
std::vector<std::string> split_csv_records(const std::string& text) {
  std::vector<std::string> records;
  std::string current;
  size_t quote_count = 0;
  for (const char c : text) {
    if (c == '"') ++quote_count;
    if (c == '\n' && quote_count % 2 == 0) {
      records.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) records.push_back(std::move(current));
  return records;
}

json sidecar_json(Table& table) {
  const TableSchema& schema = table.schema();
  json columns = json::array();
  for (const ColumnDefinition& def : schema.columns()) {
    columns.push_back({{"name", def.name},
                       {"type", data_type_name(def.type)},
                       {"nullable", def.nullable}});
  }
  // Declared sort columns: every column some live chunk carries a marker for,
  // in schema order. The importer re-verifies orderedness chunk by chunk.
  std::set<ColumnId> marked;
  for (const auto& chunk : table.chunk_snapshot()) {
    if (!chunk) continue;
    if (const auto sort = chunk->sort_column()) marked.insert(*sort);
  }
  json sort_columns = json::array();
  for (const ColumnId id : marked) sort_columns.push_back(schema.column(id).name);
  return json{{"schema", columns},
              {"chunk_capacity", table.chunk_capacity()},
              {"sort_columns", sort_columns}};
}

struct SidecarMeta {
  TableSchema schema;
  uint32_t chunk_capacity = kDefaultChunkCapacity;
  std::vector<ColumnId> sort_columns;
};

SidecarMeta parse_sidecar(const std::string& text, const std::string& path) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed sidecar " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_array()) {
    throw std::runtime_error("sidecar missing schema array: " + path);
  }
  std::vector<ColumnDefinition> columns;
  for (const json& entry : doc["schema"]) {
    ColumnDefinition def;
    def.name = entry.at("name").get<std::string>();
    const std::string type_name = entry.at("type").get<std::string>();
    const auto type = data_type_from_name(type_name);
    if (!type) throw std::runtime_error("sidecar " + path + ": unknown type " + type_name);
    def.type = *type;
    def.nullable = entry.value("nullable", false);
    columns.push_back(std::move(def));
  }
  if (columns.empty()) throw std::runtime_error("sidecar declares no columns: " + path);
  SidecarMeta meta;
  meta.schema = TableSchema(std::move(columns));
  meta.chunk_capacity = doc.value("chunk_capacity", kDefaultChunkCapacity);
  if (meta.chunk_capacity == 0) throw std::runtime_error("sidecar chunk_capacity is zero: " + path);
  if (doc.contains("sort_columns")) {
    for (const json& name : doc["sort_columns"]) {
      const auto id = meta.schema.find_column(name.get<std::string>());
      if (!id) {
        throw std::runtime_error("sidecar sort column not in schema: " + name.get<std::string>());
      }
      meta.sort_columns.push_back(*id);
    }
  }
  return meta;
}

/// One field with its raw quoting state. An unquoted empty field is NULL; a
/// quoted empty field ("") is the empty string.
struct RawField {
  std::string text;
  bool quoted = false;
};

std::vector<RawField> split_record(const std::string& record) {
  std::vector<RawField> fields;
  RawField current;
  bool in_quotes = false;
  for (size_t i = 0; i < record.size(); ++i) {
    const char c = record[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < record.size() && record[i + 1] == '"') {
          current.text += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current.text += c;
      }
    } else if (c == '"' && current.text.empty() && !current.quoted) {
      in_quotes = true;
      current.quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current = {};
    } else if (c == '\r' && i + 1 == record.size()) {
      // tolerate CRLF line endings
    } else {
      current.text += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string encode_field(const Value& v) {
  if (is_null(v)) return {};
  const std::string text = value_to_string(v);
  if (text.empty()) return "\"\"";  // distinguish the empty string from NULL
  return csv_escape(text);
}

Value parse_field(const ColumnDefinition& def, const RawField& field, size_t record_index) {
  if (field.text.empty() && !field.quoted) {
    if (def.nullable) return std::monostate{};
    if (def.type == DataType::String) return std::string{};
    throw std::runtime_error("record " + std::to_string(record_index) + ": empty field for " +
                             "non-nullable column " + def.name);
  }
  return value_from_string(def.type, field.text);
}

/// Tracks whether each chunk's rows arrive in non-decreasing order on one
/// column; rows are fed in insertion order with their chunk id.
class ChunkOrderCheck {
 public:
  explicit ChunkOrderCheck(ColumnId column) : column_(column) {}

  ColumnId column() const { return column_; }

  void feed(ChunkId chunk, const Value& value) {
    if (chunk != current_chunk_) {
      current_chunk_ = chunk;
      ordered_.resize(std::max<size_t>(ordered_.size(), size_t{chunk} + 1), true);
      has_previous_ = false;
    }
    if (has_previous_ && value_compare(previous_, value) > 0) ordered_[chunk] = false;
    previous_ = value;
    has_previous_ = true;
  }

  bool chunk_ordered(ChunkId chunk) const {
    return chunk < ordered_.size() && ordered_[chunk];
  }

 private:
  ColumnId column_;
  std::vector<bool> ordered_;
  ChunkId current_chunk_ = kInvalidChunkId;
  Value previous_;
  bool has_previous_ = false;
};

}  // namespace

std::string table_sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void export_table_csv(Table& table, const TransactionContext& ctx, const std::string& path) {
  const TableSchema& schema = table.schema();
  std::ostringstream out;
  std::vector<std::string> header;
  for (const ColumnDefinition& def : schema.columns()) header.push_back(def.name);
  out << csv_join(header) << '\n';

  std::vector<std::string> fields(schema.column_count());
  const auto chunks = table.chunk_snapshot();
  for (ChunkId chunk_id = 0; chunk_id < chunks.size(); ++chunk_id) {
    const auto& chunk = chunks[chunk_id];
    if (!chunk) continue;
    const uint32_t rows = chunk->size();
    std::vector<std::shared_ptr<const Segment>> segments;
    for (ColumnId col = 0; col < schema.column_count(); ++col) {
      segments.push_back(chunk->segment(col));
    }
    for (ChunkOffset offset = 0; offset < rows; ++offset) {
      const RowLocation loc{&table, chunk_id, offset};
      if (!ctx.sees(chunk->row_meta(offset), loc)) continue;
      for (ColumnId col = 0; col < schema.column_count(); ++col) {
        fields[col] = encode_field(segments[col]->value_at(offset));
      }
      std::string line;
      for (size_t f = 0; f < fields.size(); ++f) {
        if (f > 0) line += ',';
        line += fields[f];  // already encoded, csv_join would escape twice
      }
      out << line << '\n';
    }
  }
  write_file(path, out.str());
  write_file(table_sidecar_path(path), sidecar_json(table).dump(2) + "\n");
}

std::shared_ptr<Table> import_table_csv(TransactionManager& tm, const std::string& path,
                                        std::optional<uint32_t> chunk_capacity) {
  SidecarMeta meta = parse_sidecar(read_file(table_sidecar_path(path)), table_sidecar_path(path));
  const uint32_t capacity = chunk_capacity.value_or(meta.chunk_capacity);
  if (capacity == 0) throw std::runtime_error("chunk capacity override is zero");

  const std::string text = read_file(path);
  const std::vector<std::string> records = split_csv_records(text);
  if (records.empty()) throw std::runtime_error("CSV has no header row: " + path);

  const TableSchema& schema = meta.schema;
  const std::vector<RawField> header = split_record(records[0]);
  if (header.size() != schema.column_count()) {
    throw std::runtime_error("CSV header width does not match sidecar schema: " + path);
  }
  for (ColumnId col = 0; col < schema.column_count(); ++col) {
    if (header[col].text != schema.column(col).name) {
      throw std::runtime_error("CSV header column " + header[col].text +
                               " does not match sidecar " + schema.column(col).name);
    }
  }

  auto table = std::make_shared<Table>(schema, capacity);
  std::vector<ChunkOrderCheck> order_checks;
  for (const ColumnId col : meta.sort_columns) order_checks.emplace_back(col);

  const auto ctx = tm.begin_transaction();
  constexpr size_t kBatchRows = 16384;
  std::vector<std::vector<Value>> batch;
  batch.reserve(kBatchRows);

  const auto flush = [&]() {
    if (batch.empty()) return;
    const auto locations = tm.insert_rows(*ctx, *table, batch);
    for (size_t i = 0; i < locations.size(); ++i) {
      for (ChunkOrderCheck& check : order_checks) {
        check.feed(locations[i].chunk_id, batch[i][check.column()]);
      }
    }
    batch.clear();
  };

  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].empty()) continue;  // tolerate trailing blank lines
    const std::vector<RawField> fields = split_record(records[r]);
    if (fields.size() != schema.column_count()) {
      throw std::runtime_error("record " + std::to_string(r) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(schema.column_count()));
    }
    std::vector<Value> row(schema.column_count());
    for (ColumnId col = 0; col < schema.column_count(); ++col) {
      row[col] = parse_field(schema.column(col), fields[col], r);
    }
    batch.push_back(std::move(row));
    if (batch.size() >= kBatchRows) flush();
  }
  flush();
  tm.commit(*ctx);

  for (ChunkId id = 0; id < table->chunk_count(); ++id) {
    const auto chunk = table->chunk(id);
    if (!chunk) continue;
    if (chunk->size() == chunk->capacity()) chunk->finalize();
    for (const ChunkOrderCheck& check : order_checks) {
      if (chunk->size() > 0 && check.chunk_ordered(id)) {
        chunk->set_sort_column(check.column());
        break;
      }
    }
  }
  return table;
}

}  // namespace strata
