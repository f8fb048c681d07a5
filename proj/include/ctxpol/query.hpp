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

// Immutable ORM-style query values.
//
// A Query is built from `Query::all(table)` and narrowed with filter /
// exclude / values / none / aggregate. Every builder returns a new value and
// leaves its receiver untouched, so queries can be shared freely between
// threads and handed to policy bodies without copies leaking back.

#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctxpol/schema.hpp"
#include "ctxpol/value.hpp"

namespace ctxpol {

struct ColumnRef {
  std::string table;
  std::string column;

  std::string to_string() const { return table + "." + column; }
  friend auto operator<=>(const ColumnRef&, const ColumnRef&) = default;
  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

enum class Transform { None, Avg, Count, Sum, Min, Max };

std::string_view to_string(Transform t);
/// Accepts "Avg", "AVG", "avg" and so on. Throws BuildError.
Transform parse_transform(std::string_view name);

/// A column access, optionally through an aggregate transform.
struct FieldUse {
  ColumnRef column;
  Transform transform = Transform::None;

  /// "User.name" or "Avg(Payroll.salary)".
  std::string to_string() const;
  friend auto operator<=>(const FieldUse&, const FieldUse&) = default;
  friend bool operator==(const FieldUse&, const FieldUse&) = default;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, In };

std::string_view to_sql(CompareOp op);

class Query;

/// Predicate tree: constants, comparison atoms, conjunctions and negations.
///
/// Atoms may leave the table of their column empty; `Query::filter` binds it
/// to the query's base table. Conjunctions are flattened on construction and
/// `always()` operands are dropped, so `filter(filter(q, a), b)` carries a
/// flat AND(a, b).
class Predicate {
 public:
  enum class Kind { True, False, Atom, And, Not };

  using ValueList = std::vector<Value>;
  using Subquery = std::shared_ptr<const Query>;
  using Operand = std::variant<Value, ValueList, Subquery>;

  struct Atom {
    ColumnRef column;
    CompareOp op;
    Operand rhs;
  };

  /// The empty (always-true) predicate.
  Predicate() = default;

  static Predicate always() { return Predicate(); }
  static Predicate never();
  static Predicate compare(std::string column, CompareOp op, Value rhs);
  static Predicate compare(ColumnRef column, CompareOp op, Value rhs);
  static Predicate in(std::string column, ValueList values);
  static Predicate in(std::string column, const Query& subquery);
  static Predicate in(ColumnRef column, Operand rhs);

  /// Django-style lookup: "id", "age__gt", "eid__in". Unknown suffixes raise
  /// BuildError.
  static Predicate lookup(std::string_view key, Operand rhs);

  static Predicate all_of(std::vector<Predicate> parts);
  static Predicate negate(Predicate inner);

  Kind kind() const noexcept;
  bool is_true() const noexcept { return kind() == Kind::True; }
  const Atom& atom() const;
  const std::vector<Predicate>& children() const;  // And: operands; Not: one child

  /// Fills empty atom tables with `table`. Throws BuildError when an atom
  /// already names a different table (joins are expressed via subqueries).
  Predicate bound_to(const std::string& table) const;

  friend bool operator==(const Predicate& a, const Predicate& b);

 private:
  struct Node;
  explicit Predicate(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;  // null means True
};

Predicate operator&&(Predicate a, Predicate b);

/// Aggregate reduction of one column.
struct Aggregate {
  Transform transform;
  ColumnRef column;
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

class Query {
 public:
  /// Every row of `table`. The table is checked against the catalog only when
  /// the query is executed or rendered.
  static Query all(std::string table);

  Query filter(const Predicate& p) const;
  Query filter(std::string_view lookup, Predicate::Operand rhs) const {
    return filter(Predicate::lookup(lookup, std::move(rhs)));
  }
  Query filter(std::string_view lookup, const Query& subquery) const {
    return filter(Predicate::lookup(lookup, std::make_shared<const Query>(subquery)));
  }
  Query exclude(const Predicate& p) const;
  Query exclude(std::string_view lookup, Predicate::Operand rhs) const {
    return exclude(Predicate::lookup(lookup, std::move(rhs)));
  }
  Query exclude(std::string_view lookup, const Query& subquery) const {
    return exclude(Predicate::lookup(lookup, std::make_shared<const Query>(subquery)));
  }
  Query values(const std::vector<std::string>& columns) const;
  Query none() const;
  Query aggregate(Transform t, const std::string& column) const;

  const std::string& base() const noexcept { return base_; }
  /// Explicit projection; empty means every column of the base table.
  const std::vector<FieldUse>& projection() const noexcept { return projection_; }
  const Predicate& predicate() const noexcept { return predicate_; }
  const std::optional<Aggregate>& aggregation() const noexcept { return aggregate_; }
  bool is_empty_marked() const noexcept { return empty_; }

  /// Projection with the full-table case expanded against `catalog`.
  std::vector<FieldUse> resolved_projection(const SchemaCatalog& catalog) const;

  friend bool operator==(const Query& a, const Query& b);

 private:
  explicit Query(std::string base) : base_(std::move(base)) {}

  std::string base_;
  std::vector<FieldUse> projection_;
  Predicate predicate_;
  std::optional<Aggregate> aggregate_;
  bool empty_ = false;
};

/// Every field the query touches: projection, predicate columns (including
/// columns of subqueries written by the application), and the aggregate.
/// Sorted and duplicate-free.
std::vector<FieldUse> fields_used(const Query& q, const SchemaCatalog& catalog);

/// Checks tables and columns against the catalog. Throws SchemaError.
void validate(const Query& q, const SchemaCatalog& catalog);

/// Deterministic SQL rendering for explain output.
std::string to_sql(const Query& q, const SchemaCatalog& catalog);

}  // namespace ctxpol
