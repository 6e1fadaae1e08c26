#pragma once

#include <string>
#include <vector>

#include "strata/catalog.hpp"
#include "strata/exec.hpp"

namespace strata {

// Parses one query in the line-oriented text format:
//   scan <table> <column> <op> <value> [<value2>]
//   join <mode> <build_table>.<column> = <probe_table>.<column>
// `#` starts a comment; operand tokens are typed by the column they compare
// against. Throws std::invalid_argument with the offending line on errors.
QuerySpec parse_query_text(const std::string& text, const Catalog& catalog,
                           const std::string& query_id, bool reorder_predicates = false);

// Splits a file into queries at blank lines and parses each. Query ids are
// q1, q2, ... in file order.
std::vector<QuerySpec> parse_query_file(const std::string& content, const Catalog& catalog,
                                        bool reorder_predicates = false);

}  // namespace strata
