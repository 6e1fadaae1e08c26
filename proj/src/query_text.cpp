#include "strata/query_text.hpp"

#include <sstream>
#include <stdexcept>

namespace strata {

namespace {

[[noreturn]] void fail(const std::string& line, const std::string& why) {
  throw std::invalid_argument("bad query line \"" + line + "\": " + why);
}

// Splits "table.column" at the dot.
std::pair<std::string, std::string> split_column_ref(const std::string& token,
                                                     const std::string& line) {
  const auto dot = token.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == token.size()) {
    fail(line, "expected <table>.<column>, got " + token);
  }
  return {token.substr(0, dot), token.substr(dot + 1)};
}

Value parse_operand(const Catalog& catalog, const std::string& table,
                    const std::string& column, const std::string& token,
                    const std::string& line) {
  const auto& schema = catalog.get(table)->schema();
  const auto id = schema.find_column(column);
  if (!id) fail(line, "unknown column " + table + "." + column);
  try {
    return value_from_string(schema.column(*id).type, token);
  } catch (const std::invalid_argument& e) {
    fail(line, e.what());
  }
}

}  // namespace

QuerySpec parse_query_text(const std::string& text, const Catalog& catalog,
                           const std::string& query_id, bool reorder_predicates) {
  QuerySpec spec;
  spec.id = query_id;
  spec.reorder_predicates = reorder_predicates;

  std::istringstream lines(text);
  std::string raw;
  while (std::getline(lines, raw)) {
    const auto hash = raw.find('#');
    std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::istringstream tokens(line);
    std::string op;
    if (!(tokens >> op)) continue;  // blank or comment-only line

    if (op == "scan") {
      ScanOp scan;
      std::string comparator_token, value_token;
      if (!(tokens >> scan.table >> scan.column >> comparator_token >> value_token)) {
        fail(line, "expected: scan <table> <column> <op> <value>");
      }
      if (!catalog.contains(scan.table)) fail(line, "unknown table " + scan.table);
      const auto& schema = catalog.get(scan.table)->schema();
      const auto column_id = schema.find_column(scan.column);
      if (!column_id) fail(line, "unknown column " + scan.table + "." + scan.column);
      const auto comparator = comparator_from_name(comparator_token);
      if (!comparator) fail(line, "unknown comparator " + comparator_token);

      scan.predicate.column = *column_id;
      scan.predicate.comparator = *comparator;
      scan.predicate.value =
          parse_operand(catalog, scan.table, scan.column, value_token, line);
      if (*comparator == Comparator::Between) {
        std::string second_token;
        if (!(tokens >> second_token)) fail(line, "between needs two operands");
        scan.predicate.second_value =
            parse_operand(catalog, scan.table, scan.column, second_token, line);
      }
      std::string extra;
      if (tokens >> extra) fail(line, "unexpected trailing token " + extra);
      spec.scans.push_back(std::move(scan));
    } else if (op == "join") {
      JoinOp join;
      std::string mode_token, build_token, eq_token, probe_token;
      if (!(tokens >> mode_token >> build_token >> eq_token >> probe_token)) {
        fail(line, "expected: join <mode> <build>.<col> = <probe>.<col>");
      }
      if (eq_token != "=") fail(line, "expected '=' between join sides");
      const auto mode = join_mode_from_name(mode_token);
      if (!mode) fail(line, "unknown join mode " + mode_token);
      join.mode = *mode;
      std::tie(join.build_table, join.build_column) = split_column_ref(build_token, line);
      std::tie(join.probe_table, join.probe_column) = split_column_ref(probe_token, line);
      for (const auto& [table, column] :
           {std::pair{join.build_table, join.build_column},
            std::pair{join.probe_table, join.probe_column}}) {
        if (!catalog.contains(table)) fail(line, "unknown table " + table);
        if (!catalog.get(table)->schema().find_column(column)) {
          fail(line, "unknown column " + table + "." + column);
        }
      }
      spec.joins.push_back(std::move(join));
    } else {
      fail(line, "unknown operator " + op);
    }
  }
  return spec;
}

std::vector<QuerySpec> parse_query_file(const std::string& content, const Catalog& catalog,
                                        bool reorder_predicates) {
  // Queries are separated by lines that are blank after comment stripping.
  std::vector<std::string> blocks{std::string{}};
  std::istringstream lines(content);
  std::string raw;
  while (std::getline(lines, raw)) {
    const auto hash = raw.find('#');
    const std::string stripped = hash == std::string::npos ? raw : raw.substr(0, hash);
    if (stripped.find_first_not_of(" \t\r") == std::string::npos) {
      if (!blocks.back().empty()) blocks.emplace_back();
      continue;
    }
    blocks.back() += raw + "\n";
  }
  if (!blocks.empty() && blocks.back().empty()) blocks.pop_back();

  std::vector<QuerySpec> specs;
  for (size_t i = 0; i < blocks.size(); ++i) {
    specs.push_back(parse_query_text(blocks[i], catalog, "q" + std::to_string(i + 1),
                                     reorder_predicates));
  }
  return specs;
}

}  // namespace strata
