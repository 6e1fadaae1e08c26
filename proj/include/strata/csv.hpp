#pragma once

#include <string>
#include <vector>

namespace strata {

// Minimal CSV dialect: comma separator, fields quoted only when they contain
// a comma, quote, or newline; embedded quotes double. Header rows mandatory
// at the call sites.
std::string csv_escape(const std::string& field);
std::string csv_join(const std::vector<std::string>& fields);
std::vector<std::string> csv_split(const std::string& line);

}  // namespace strata
