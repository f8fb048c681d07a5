// Copyright 2026 The ctxpol Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctxpol/schema.hpp"

#include <set>

#include "ctxpol/errors.hpp"

namespace ctxpol {

std::optional<std::size_t> TableSchema::index_of(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return i;
  }
  return std::nullopt;
}

void TableSchema::check() const {
  if (name.empty()) throw SchemaError("table name must not be empty");
  if (columns.empty()) throw SchemaError("table " + name + " has no columns");
  std::set<std::string_view> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw SchemaError("empty column name in table " + name);
    if (c.kind == ValueKind::Null) throw SchemaError("column " + name + "." + c.name + " has null kind");
    if (!seen.insert(c.name).second) {
      throw SchemaError("duplicate column " + name + "." + c.name);
    }
  }
  if (primary_key && !has_column(*primary_key)) {
    throw SchemaError("primary key " + *primary_key + " is not a column of " + name);
  }
}

void SchemaCatalog::add(TableSchema table) {
  table.check();
  if (find(table.name) != nullptr) {
    throw ConstraintError("table " + table.name + " already exists");
  }
  tables_.push_back(std::move(table));
}

const TableSchema* SchemaCatalog::find(std::string_view table) const {
  for (const auto& t : tables_) {
    if (t.name == table) return &t;
  }
  return nullptr;
}

const TableSchema& SchemaCatalog::at(std::string_view table) const {
  if (const auto* t = find(table)) return *t;
  throw SchemaError("unknown table " + std::string(table));
}

}  // namespace ctxpol
