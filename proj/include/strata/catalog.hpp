#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "strata/table.hpp"

namespace strata {

// Name -> table registry. Ordered map so iteration order is deterministic.
class Catalog {
 public:
  void add(const std::string& name, std::shared_ptr<Table> table) {
    if (!tables_.emplace(name, std::move(table)).second) {
      throw std::invalid_argument("table already registered: " + name);
    }
  }

  void replace(const std::string& name, std::shared_ptr<Table> table) {
    tables_[name] = std::move(table);
  }

  std::shared_ptr<Table> get(const std::string& name) const {
    const auto it = tables_.find(name);
    if (it == tables_.end()) throw std::out_of_range("unknown table: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return tables_.count(name) > 0; }

  const std::map<std::string, std::shared_ptr<Table>>& tables() const { return tables_; }

 private:
  std::map<std::string, std::shared_ptr<Table>> tables_;
};

}  // namespace strata
