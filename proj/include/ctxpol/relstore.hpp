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

// Embedded in-memory relational store.
//
// Executes Query values directly (no SQL parsing). Rows of keyed tables are
// kept sorted by primary key, and results come back in that order. Readers
// may run concurrently; writers are exclusive.

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ctxpol/query.hpp"
#include "ctxpol/schema.hpp"
#include "ctxpol/value.hpp"

namespace ctxpol {

/// Values aligned with a table schema or a result header.
using Row = std::vector<Value>;

/// Rows produced by evaluating a query, in deterministic order.
class ResultSet {
 public:
  ResultSet() = default;
  ResultSet(std::uint64_t fingerprint, std::vector<FieldUse> header, std::vector<Row> rows);

  /// A single-column result carrying a human-readable message instead of
  /// data rows. Post-eval bodies may substitute one for an empty result.
  static ResultSet message(std::string text);

  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  const std::vector<FieldUse>& header() const noexcept { return header_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::vector<Row>& rows() noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  bool is_message() const noexcept { return message_; }
  bool is_aggregate() const noexcept {
    return header_.size() == 1 && header_.front().transform != Transform::None;
  }

  /// Position of the plain column named `column`, if projected.
  std::optional<std::size_t> column_index(std::string_view column) const;
  /// Throws SchemaError when the column is not in the header.
  const Value& get(std::size_t row, std::string_view column) const;
  void set(std::size_t row, std::string_view column, Value v);

  /// Rows as objects keyed by column name; aggregates as a bare scalar;
  /// message results as a list of strings.
  nlohmann::ordered_json to_json() const;

  friend bool operator==(const ResultSet& a, const ResultSet& b);

 private:
  std::uint64_t fingerprint_ = 0;
  std::vector<FieldUse> header_;
  std::vector<Row> rows_;
  bool message_ = false;
};

/// JSON key for a header entry: "salary" or "AVG(salary)".
std::string column_label(const FieldUse& f);

class Database {
 public:
  Database();
  Database(Database&&) noexcept;
  Database& operator=(Database&&) noexcept;
  ~Database();

  /// Deep copy, including the catalog. Counters start at zero.
  Database clone() const;

  void create_table(TableSchema schema);

  /// Appends a row. Int values in Float columns are widened.
  /// Throws KindError on arity or kind mismatch, ConstraintError on a
  /// duplicate key or unknown table.
  void insert(std::string_view table, Row row);

  ResultSet execute(const Query& q) const;
  bool exists(const Query& q) const;

  /// Direct primary-key lookup. Not counted as a query execution.
  std::optional<Row> find(std::string_view table, const Value& key) const;

  const SchemaCatalog& catalog() const noexcept { return catalog_; }
  std::size_t row_count(std::string_view table) const;

  /// Visits rows in storage order (primary key, or insertion order).
  void for_each_row(std::string_view table, const std::function<void(const Row&)>& fn) const;

  /// Number of execute()/exists() calls served so far.
  std::uint64_t execution_count() const noexcept {
    return sync_->executions.load(std::memory_order_relaxed);
  }

 private:
  struct Table {
    std::size_t key_index = 0;
    bool keyed = false;
    std::vector<Row> rows;  // sorted by key when keyed
  };

  const Table& table(std::string_view name) const;
  // Subquery and exists runs skip the fingerprint; nobody reads it.
  ResultSet run(const Query& q, bool stop_at_first, bool fingerprint) const;

  SchemaCatalog catalog_;
  std::map<std::string, Table, std::less<>> tables_;
  struct Sync {
    std::shared_mutex mutex;
    std::atomic<std::uint64_t> executions{0};
  };
  std::unique_ptr<Sync> sync_;

  friend class Evaluator;
};

/// Writes the JSON-lines snapshot: the catalog on line 1, then one object per
/// row tagged with "_table".
void write_snapshot(const Database& db, std::ostream& out);
std::string snapshot_text(const Database& db);

/// Parses a snapshot. Throws ParseError carrying the offending line number.
Database load_snapshot(std::istream& in);
Database load_snapshot_file(const std::string& path);

/// FNV-1a over the snapshot text; identical databases hash identically.
std::uint64_t snapshot_checksum(const Database& db);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace ctxpol
