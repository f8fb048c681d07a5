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

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxpol/value.hpp"

namespace ctxpol {

struct ColumnSchema {
  std::string name;
  ValueKind kind;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnSchema> columns;
  /// Absent for link tables such as Invitee(eid, empid); their rows are kept
  /// in insertion order.
  std::optional<std::string> primary_key;

  /// Index of `column`, or nullopt.
  std::optional<std::size_t> index_of(std::string_view column) const;
  bool has_column(std::string_view column) const { return index_of(column).has_value(); }

  /// Checks non-empty names, uniqueness, and that the key column exists.
  void check() const;
};

/// Table definitions in creation order. Read-only once the store is built.
class SchemaCatalog {
 public:
  void add(TableSchema table);

  const TableSchema* find(std::string_view table) const;
  /// Throws SchemaError when the table is unknown.
  const TableSchema& at(std::string_view table) const;
  const std::vector<TableSchema>& tables() const noexcept { return tables_; }

 private:
  std::vector<TableSchema> tables_;
};

}  // namespace ctxpol
