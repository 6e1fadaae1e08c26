#pragma once

#include <memory>
#include <optional>
#include <string>

#include "strata/mvcc.hpp"
#include "strata/table.hpp"

namespace strata {

/// Sidecar metadata file accompanying a table CSV: "<csv_path>.meta.json".
std::string table_sidecar_path(const std::string& csv_path);

/// Writes the rows visible to `ctx` as CSV with a header row; NULL is encoded
/// as an empty field. A sidecar metadata file records the schema, the chunk
/// capacity, and the declared sort columns (columns some live chunk carries a
/// sort marker for). Throws std::runtime_error on I/O failure.
void export_table_csv(Table& table, const TransactionContext& ctx, const std::string& path);

/// Loads a CSV + sidecar pair written by export_table_csv. Rows are inserted
/// and committed as a single transaction; full chunks are finalized. Each
/// chunk that is actually ordered by a declared sort column gets its sort
/// marker set (verified during the load, never assumed). `chunk_capacity`
/// overrides the sidecar's value when given.
///
/// An empty field reads as NULL for nullable columns and as the empty string
/// for non-nullable string-typed columns; for any other non-nullable column
/// it is an error.
std::shared_ptr<Table> import_table_csv(TransactionManager& tm, const std::string& path,
                                        std::optional<uint32_t> chunk_capacity = std::nullopt);

}  // namespace strata
