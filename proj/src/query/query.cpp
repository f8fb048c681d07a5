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

#include "ctxpol/query.hpp"

#include <algorithm>
#include <cctype>

#include "ctxpol/errors.hpp"

namespace ctxpol {

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::None: return "None";
    case Transform::Avg: return "Avg";
    case Transform::Count: return "Count";
    case Transform::Sum: return "Sum";
    case Transform::Min: return "Min";
    case Transform::Max: return "Max";
  }
  return "?";
}

Transform parse_transform(std::string_view name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "none") return Transform::None;
  if (lower == "avg") return Transform::Avg;
  if (lower == "count") return Transform::Count;
  if (lower == "sum") return Transform::Sum;
  if (lower == "min") return Transform::Min;
  if (lower == "max") return Transform::Max;
  throw BuildError("unknown transform '" + std::string(name) + "'");
}

std::string FieldUse::to_string() const {
  if (transform == Transform::None) return column.to_string();
  return std::string(ctxpol::to_string(transform)) + "(" + column.to_string() + ")";
}

std::string_view to_sql(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "<>";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::In: return "IN";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Predicate

struct Predicate::Node {
  Kind kind;
  std::optional<Atom> atom;
  std::vector<Predicate> children;
};

Predicate Predicate::never() {
  return Predicate(std::make_shared<const Node>(Node{Kind::False, std::nullopt, {}}));
}

Predicate Predicate::compare(std::string column, CompareOp op, Value rhs) {
  return compare(ColumnRef{"", std::move(column)}, op, std::move(rhs));
}

Predicate Predicate::compare(ColumnRef column, CompareOp op, Value rhs) {
  if (column.column.empty()) throw BuildError("predicate column must not be empty");
  if (op == CompareOp::In) return in(std::move(column), ValueList{std::move(rhs)});
  return Predicate(std::make_shared<const Node>(
      Node{Kind::Atom, Atom{std::move(column), op, std::move(rhs)}, {}}));
}

Predicate Predicate::in(std::string column, ValueList values) {
  return in(ColumnRef{"", std::move(column)}, std::move(values));
}

Predicate Predicate::in(std::string column, const Query& subquery) {
  return in(ColumnRef{"", std::move(column)}, std::make_shared<const Query>(subquery));
}

Predicate Predicate::in(ColumnRef column, Operand rhs) {
  if (column.column.empty()) throw BuildError("predicate column must not be empty");
  if (std::holds_alternative<Value>(rhs)) {
    throw BuildError("IN needs a value list or a subquery");
  }
  if (const auto* sub = std::get_if<Subquery>(&rhs)) {
    if (!*sub) throw BuildError("IN subquery is null");
    if ((*sub)->aggregation() || (*sub)->projection().size() != 1) {
      throw BuildError("IN subquery must project exactly one column");
    }
  }
  return Predicate(std::make_shared<const Node>(
      Node{Kind::Atom, Atom{std::move(column), CompareOp::In, std::move(rhs)}, {}}));
}

Predicate Predicate::lookup(std::string_view key, Operand rhs) {
  std::string_view column = key;
  std::string_view suffix;
  if (auto pos = key.find("__"); pos != std::string_view::npos) {
    column = key.substr(0, pos);
    suffix = key.substr(pos + 2);
  }
  if (column.empty()) throw BuildError("lookup '" + std::string(key) + "' names no column");
  if (suffix == "in") return in(ColumnRef{"", std::string(column)}, std::move(rhs));

  CompareOp op;
  if (suffix.empty() || suffix == "exact") op = CompareOp::Eq;
  else if (suffix == "ne") op = CompareOp::Ne;
  else if (suffix == "lt") op = CompareOp::Lt;
  else if (suffix == "lte") op = CompareOp::Le;
  else if (suffix == "gt") op = CompareOp::Gt;
  else if (suffix == "gte") op = CompareOp::Ge;
  else throw BuildError("unknown lookup operator '" + std::string(suffix) + "'");

  auto* value = std::get_if<Value>(&rhs);
  if (value == nullptr) {
    throw BuildError("lookup '" + std::string(key) + "' needs a scalar operand");
  }
  return compare(std::string(column), op, std::move(*value));
}

Predicate Predicate::all_of(std::vector<Predicate> parts) {
  std::vector<Predicate> flat;
  for (auto& p : parts) {
    switch (p.kind()) {
      case Kind::True: break;
      case Kind::And:
        flat.insert(flat.end(), p.children().begin(), p.children().end());
        break;
      default: flat.push_back(std::move(p));
    }
  }
  if (flat.empty()) return Predicate();
  if (flat.size() == 1) return flat.front();
  return Predicate(std::make_shared<const Node>(Node{Kind::And, std::nullopt, std::move(flat)}));
}

Predicate Predicate::negate(Predicate inner) {
  return Predicate(
      std::make_shared<const Node>(Node{Kind::Not, std::nullopt, {std::move(inner)}}));
}

Predicate operator&&(Predicate a, Predicate b) {
  return Predicate::all_of({std::move(a), std::move(b)});
}

Predicate::Kind Predicate::kind() const noexcept {
  return node_ ? node_->kind : Kind::True;
}

const Predicate::Atom& Predicate::atom() const {
  if (kind() != Kind::Atom) throw BuildError("predicate is not an atom");
  return *node_->atom;
}

const std::vector<Predicate>& Predicate::children() const {
  static const std::vector<Predicate> kNone;
  return node_ ? node_->children : kNone;
}

Predicate Predicate::bound_to(const std::string& table) const {
  switch (kind()) {
    case Kind::True:
    case Kind::False:
      return *this;
    case Kind::Atom: {
      const Atom& a = atom();
      if (a.column.table == table) return *this;
      if (!a.column.table.empty()) {
        throw BuildError("predicate on " + a.column.to_string() + " cannot apply to table " + table);
      }
      Atom bound = a;
      bound.column.table = table;
      return Predicate(std::make_shared<const Node>(Node{Kind::Atom, std::move(bound), {}}));
    }
    case Kind::And:
    case Kind::Not: {
      std::vector<Predicate> kids;
      kids.reserve(children().size());
      for (const auto& c : children()) kids.push_back(c.bound_to(table));
      return Predicate(std::make_shared<const Node>(Node{kind(), std::nullopt, std::move(kids)}));
    }
  }
  return *this;
}

namespace {

bool operand_equal(const Predicate::Operand& a, const Predicate::Operand& b) {
  if (a.index() != b.index()) return false;
  if (const auto* sa = std::get_if<Predicate::Subquery>(&a)) {
    return **sa == *std::get<Predicate::Subquery>(b);
  }
  return a == b;
}

}  // namespace

bool operator==(const Predicate& a, const Predicate& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  if (a.kind() == Predicate::Kind::Atom) {
    const auto& x = a.atom();
    const auto& y = b.atom();
    return x.column == y.column && x.op == y.op && operand_equal(x.rhs, y.rhs);
  }
  return a.children() == b.children();
}

// ---------------------------------------------------------------------------
// Query

Query Query::all(std::string table) {
  if (table.empty()) throw BuildError("table name must not be empty");
  return Query(std::move(table));
}

Query Query::filter(const Predicate& p) const {
  Query q = *this;
  q.predicate_ = predicate_ && p.bound_to(base_);
  return q;
}

Query Query::exclude(const Predicate& p) const {
  Query q = *this;
  q.predicate_ = predicate_ && Predicate::negate(p.bound_to(base_));
  return q;
}

Query Query::values(const std::vector<std::string>& columns) const {
  if (columns.empty()) throw BuildError("values() needs at least one column");
  if (aggregate_) throw BuildError("values() on an aggregated query");
  std::vector<FieldUse> narrowed;
  for (const auto& c : columns) {
    if (c.empty()) throw BuildError("values() column must not be empty");
    FieldUse f{{base_, c}, Transform::None};
    if (!projection_.empty() &&
        std::find(projection_.begin(), projection_.end(), f) == projection_.end()) {
      throw BuildError("values(): column " + f.column.to_string() + " is not in the projection");
    }
    if (std::find(narrowed.begin(), narrowed.end(), f) != narrowed.end()) {
      throw BuildError("values(): duplicate column " + c);
    }
    narrowed.push_back(std::move(f));
  }
  Query q = *this;
  q.projection_ = std::move(narrowed);
  return q;
}

Query Query::none() const {
  Query q = *this;
  q.empty_ = true;
  return q;
}

Query Query::aggregate(Transform t, const std::string& column) const {
  if (t == Transform::None) throw BuildError("aggregate() needs a reducing transform");
  if (aggregate_) throw BuildError("query is already aggregated");
  if (column.empty()) throw BuildError("aggregate() column must not be empty");
  ColumnRef ref{base_, column};
  if (!projection_.empty() &&
      std::none_of(projection_.begin(), projection_.end(),
                   [&](const FieldUse& f) { return f.column == ref; })) {
    throw BuildError("aggregate(): column " + ref.to_string() + " is not in the projection");
  }
  Query q = *this;
  q.projection_.clear();
  q.aggregate_ = Aggregate{t, std::move(ref)};
  return q;
}

std::vector<FieldUse> Query::resolved_projection(const SchemaCatalog& catalog) const {
  if (aggregate_) return {FieldUse{aggregate_->column, aggregate_->transform}};
  if (!projection_.empty()) return projection_;
  const TableSchema& t = catalog.at(base_);
  std::vector<FieldUse> out;
  out.reserve(t.columns.size());
  for (const auto& c : t.columns) out.push_back(FieldUse{{base_, c.name}, Transform::None});
  return out;
}

bool operator==(const Query& a, const Query& b) {
  return a.base_ == b.base_ && a.projection_ == b.projection_ && a.predicate_ == b.predicate_ &&
         a.aggregate_ == b.aggregate_ && a.empty_ == b.empty_;
}

// ---------------------------------------------------------------------------
// Field extraction

namespace {

void collect_predicate_fields(const Predicate& p, const SchemaCatalog& catalog,
                              std::vector<FieldUse>& out);

void collect_query_fields(const Query& q, const SchemaCatalog& catalog,
                          std::vector<FieldUse>& out) {
  auto proj = q.resolved_projection(catalog);
  out.insert(out.end(), std::make_move_iterator(proj.begin()), std::make_move_iterator(proj.end()));
  collect_predicate_fields(q.predicate(), catalog, out);
}

void collect_predicate_fields(const Predicate& p, const SchemaCatalog& catalog,
                              std::vector<FieldUse>& out) {
  switch (p.kind()) {
    case Predicate::Kind::True:
    case Predicate::Kind::False:
      return;
    case Predicate::Kind::Atom: {
      const auto& a = p.atom();
      out.push_back(FieldUse{a.column, Transform::None});
      if (const auto* sub = std::get_if<Predicate::Subquery>(&a.rhs)) {
        collect_query_fields(**sub, catalog, out);
      }
      return;
    }
    case Predicate::Kind::And:
    case Predicate::Kind::Not:
      for (const auto& c : p.children()) collect_predicate_fields(c, catalog, out);
      return;
  }
}

}  // namespace

std::vector<FieldUse> fields_used(const Query& q, const SchemaCatalog& catalog) {
  std::vector<FieldUse> out;
  collect_query_fields(q, catalog, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Validation and rendering

namespace {

const TableSchema& require_column(const SchemaCatalog& catalog, const ColumnRef& c) {
  const TableSchema& t = catalog.at(c.table);
  if (!t.has_column(c.column)) throw SchemaError("unknown column " + c.to_string());
  return t;
}

void validate_predicate(const Predicate& p, const SchemaCatalog& catalog) {
  switch (p.kind()) {
    case Predicate::Kind::True:
    case Predicate::Kind::False:
      return;
    case Predicate::Kind::Atom: {
      const auto& a = p.atom();
      require_column(catalog, a.column);
      if (const auto* sub = std::get_if<Predicate::Subquery>(&a.rhs)) validate(**sub, catalog);
      return;
    }
    default:
      for (const auto& c : p.children()) validate_predicate(c, catalog);
  }
}

std::string render_select(const Query& q, const SchemaCatalog& catalog, bool ordered);

std::string render_atom(const Predicate::Atom& a, const SchemaCatalog& catalog) {
  std::string out = "(" + a.column.column + " " + std::string(to_sql(a.op)) + " ";
  if (const auto* v = std::get_if<Value>(&a.rhs)) {
    out += v->to_sql();
  } else if (const auto* list = std::get_if<Predicate::ValueList>(&a.rhs)) {
    out += "(";
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (i) out += ", ";
      out += (*list)[i].to_sql();
    }
    out += ")";
  } else {
    out += "(" + render_select(*std::get<Predicate::Subquery>(a.rhs), catalog, false) + ")";
  }
  return out + ")";
}

std::string render_predicate(const Predicate& p, const SchemaCatalog& catalog) {
  switch (p.kind()) {
    case Predicate::Kind::True: return "(1 = 1)";
    case Predicate::Kind::False: return "(1 = 0)";
    case Predicate::Kind::Atom: return render_atom(p.atom(), catalog);
    case Predicate::Kind::Not: return "(NOT " + render_predicate(p.children().front(), catalog) + ")";
    case Predicate::Kind::And: {
      std::string out = "(";
      for (std::size_t i = 0; i < p.children().size(); ++i) {
        if (i) out += " AND ";
        out += render_predicate(p.children()[i], catalog);
      }
      return out + ")";
    }
  }
  return "";
}

std::string render_select(const Query& q, const SchemaCatalog& catalog, bool ordered) {
  validate(q, catalog);
  const TableSchema& table = catalog.at(q.base());
  std::string out = "SELECT ";
  if (const auto& agg = q.aggregation()) {
    std::string name(to_string(agg->transform));
    for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    out += name + "(" + agg->column.column + ")";
  } else {
    auto proj = q.resolved_projection(catalog);
    for (std::size_t i = 0; i < proj.size(); ++i) {
      if (i) out += ", ";
      out += proj[i].column.column;
    }
  }
  out += " FROM " + q.base();

  std::vector<std::string> conjuncts;
  if (q.is_empty_marked()) conjuncts.emplace_back("(1 = 0)");
  const Predicate& p = q.predicate();
  if (p.kind() == Predicate::Kind::And) {
    for (const auto& c : p.children()) conjuncts.push_back(render_predicate(c, catalog));
  } else if (!p.is_true()) {
    conjuncts.push_back(render_predicate(p, catalog));
  }
  if (!conjuncts.empty()) {
    out += " WHERE ";
    for (std::size_t i = 0; i < conjuncts.size(); ++i) {
      if (i) out += " AND ";
      out += conjuncts[i];
    }
  }
  if (ordered && !q.aggregation() && table.primary_key) out += " ORDER BY " + *table.primary_key;
  return out;
}

}  // namespace

void validate(const Query& q, const SchemaCatalog& catalog) {
  const TableSchema& t = catalog.at(q.base());
  for (const auto& f : q.projection()) {
    if (f.column.table != t.name || !t.has_column(f.column.column)) {
      throw SchemaError("unknown column " + f.column.to_string());
    }
  }
  if (const auto& agg = q.aggregation()) require_column(catalog, agg->column);
  validate_predicate(q.predicate(), catalog);
}

std::string to_sql(const Query& q, const SchemaCatalog& catalog) {
  return render_select(q, catalog, true);
}

}  // namespace ctxpol
