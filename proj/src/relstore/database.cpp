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

#include <algorithm>
#include <mutex>

#include "ctxpol/errors.hpp"
#include "ctxpol/relstore.hpp"

namespace ctxpol {

// ---------------------------------------------------------------------------
// ResultSet

ResultSet::ResultSet(std::uint64_t fingerprint, std::vector<FieldUse> header,
                     std::vector<Row> rows)
    : fingerprint_(fingerprint), header_(std::move(header)), rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    if (r.size() != header_.size()) throw KindError("result row does not match header arity");
  }
}

ResultSet ResultSet::message(std::string text) {
  ResultSet r(0, {FieldUse{{"$message", "message"}, Transform::None}}, {{Value(std::move(text))}});
  r.message_ = true;
  return r;
}

std::optional<std::size_t> ResultSet::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i].transform == Transform::None && header_[i].column.column == column) return i;
  }
  return std::nullopt;
}

const Value& ResultSet::get(std::size_t row, std::string_view column) const {
  auto idx = column_index(column);
  if (!idx) throw SchemaError("column " + std::string(column) + " is not in the result");
  return rows_.at(row).at(*idx);
}

void ResultSet::set(std::size_t row, std::string_view column, Value v) {
  auto idx = column_index(column);
  if (!idx) throw SchemaError("column " + std::string(column) + " is not in the result");
  rows_.at(row).at(*idx) = std::move(v);
}

std::string column_label(const FieldUse& f) {
  if (f.transform == Transform::None) return f.column.column;
  std::string name(to_string(f.transform));
  for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name + "(" + f.column.column + ")";
}

nlohmann::ordered_json ResultSet::to_json() const {
  if (message_) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& r : rows_) out.push_back(r.front().to_json());
    return out;
  }
  if (is_aggregate()) {
    return rows_.empty() ? nlohmann::ordered_json(nullptr) : rows_.front().front().to_json();
  }
  auto out = nlohmann::ordered_json::array();
  for (const auto& r : rows_) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < header_.size(); ++i) obj[column_label(header_[i])] = r[i].to_json();
    out.push_back(std::move(obj));
  }
  return out;
}

bool operator==(const ResultSet& a, const ResultSet& b) {
  return a.fingerprint_ == b.fingerprint_ && a.header_ == b.header_ && a.rows_ == b.rows_ &&
         a.message_ == b.message_;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

bool comparable(ValueKind column, ValueKind literal) {
  if (literal == ValueKind::Null) return true;
  auto numeric = [](ValueKind k) { return k == ValueKind::Int || k == ValueKind::Float; };
  return column == literal || (numeric(column) && numeric(literal));
}

bool less_value(const Value& a, const Value& b) { return a.compare(b) < 0; }

struct Compiled {
  Predicate::Kind kind = Predicate::Kind::True;
  std::size_t column = 0;
  CompareOp op = CompareOp::Eq;
  Value scalar;
  std::vector<Value> set;  // sorted, non-null
  std::vector<Compiled> children;

  bool eval(const Row& row) const {
    switch (kind) {
      case Predicate::Kind::True: return true;
      case Predicate::Kind::False: return false;
      case Predicate::Kind::Not: return !children.front().eval(row);
      case Predicate::Kind::And:
        for (const auto& c : children) {
          if (!c.eval(row)) return false;
        }
        return true;
      case Predicate::Kind::Atom: break;
    }
    const Value& lhs = row[column];
    if (lhs.is_null()) return false;
    if (op == CompareOp::In) {
      return std::binary_search(set.begin(), set.end(), lhs, less_value);
    }
    if (scalar.is_null()) return false;
    auto c = lhs.compare(scalar);
    switch (op) {
      case CompareOp::Eq: return c == 0;
      case CompareOp::Ne: return c != 0;
      case CompareOp::Lt: return c < 0;
      case CompareOp::Le: return c <= 0;
      case CompareOp::Gt: return c > 0;
      case CompareOp::Ge: return c >= 0;
      case CompareOp::In: break;
    }
    return false;
  }
};

}  // namespace

class Evaluator {
 public:
  explicit Evaluator(const Database& db) : db_(db) {}

  Compiled compile(const Predicate& p, const TableSchema& schema) const {
    Compiled c;
    c.kind = p.kind();
    switch (p.kind()) {
      case Predicate::Kind::True:
      case Predicate::Kind::False:
        return c;
      case Predicate::Kind::And:
      case Predicate::Kind::Not:
        for (const auto& child : p.children()) c.children.push_back(compile(child, schema));
        return c;
      case Predicate::Kind::Atom: break;
    }
    const auto& atom = p.atom();
    auto idx = schema.index_of(atom.column.column);
    if (atom.column.table != schema.name || !idx) {
      throw SchemaError("unknown column " + atom.column.to_string());
    }
    c.column = *idx;
    c.op = atom.op;
    const ValueKind column_kind = schema.columns[*idx].kind;
    auto check = [&](ValueKind k) {
      if (!comparable(column_kind, k)) {
        throw KindError("cannot compare " + atom.column.to_string() + " (" +
                        std::string(to_string(column_kind)) + ") with " +
                        std::string(to_string(k)));
      }
    };
    if (const auto* v = std::get_if<Value>(&atom.rhs)) {
      check(v->kind());
      c.scalar = *v;
      return c;
    }
    std::vector<Value> values;
    if (const auto* list = std::get_if<Predicate::ValueList>(&atom.rhs)) {
      values = *list;
    } else {
      const Query& sub = *std::get<Predicate::Subquery>(atom.rhs);
      ResultSet rs = db_.run(sub, false, false);
      values.reserve(rs.size());
      for (auto& r : rs.rows()) values.push_back(std::move(r.front()));
    }
    for (const auto& v : values) check(v.kind());
    std::erase_if(values, [](const Value& v) { return v.is_null(); });
    std::sort(values.begin(), values.end(), less_value);
    values.erase(std::unique(values.begin(), values.end(),
                             [](const Value& a, const Value& b) { return a.compare(b) == 0; }),
                 values.end());
    c.set = std::move(values);
    return c;
  }

 private:
  const Database& db_;
};

namespace {

Value reduce(Transform t, const std::vector<const Value*>& column, ValueKind kind) {
  std::vector<const Value*> present;
  for (const auto* v : column) {
    if (!v->is_null()) present.push_back(v);
  }
  if (t == Transform::Count) return Value(static_cast<std::int64_t>(present.size()));
  if ((t == Transform::Avg || t == Transform::Sum) && kind != ValueKind::Int &&
      kind != ValueKind::Float) {
    throw KindError(std::string(to_string(t)) + " needs a numeric column");
  }
  if (present.empty()) return Value{};
  switch (t) {
    case Transform::Sum:
    case Transform::Avg: {
      if (t == Transform::Sum && kind == ValueKind::Int) {
        std::int64_t s = 0;
        for (const auto* v : present) s += v->as_int();
        return Value(s);
      }
      double s = 0.0;
      for (const auto* v : present) s += v->as_float();
      return t == Transform::Sum ? Value(s) : Value(s / static_cast<double>(present.size()));
    }
    case Transform::Min:
    case Transform::Max: {
      const Value* best = present.front();
      for (const auto* v : present) {
        auto c = v->compare(*best);
        if ((t == Transform::Min && c < 0) || (t == Transform::Max && c > 0)) best = v;
      }
      return *best;
    }
    default: break;
  }
  return Value{};
}

}  // namespace

ResultSet Database::run(const Query& q, bool stop_at_first, bool fingerprint) const {
  validate(q, catalog_);
  const TableSchema& schema = catalog_.at(q.base());
  const Table& t = table(q.base());
  const std::uint64_t fp = fingerprint ? fnv1a(to_sql(q, catalog_)) : 0;

  std::vector<const Row*> matched;
  if (!q.is_empty_marked()) {
    Compiled pred = Evaluator(*this).compile(q.predicate(), schema);
    for (const auto& r : t.rows) {
      if (pred.eval(r)) {
        matched.push_back(&r);
        if (stop_at_first) break;
      }
    }
  }

  if (const auto& agg = q.aggregation()) {
    const std::size_t idx = *schema.index_of(agg->column.column);
    std::vector<const Value*> column;
    column.reserve(matched.size());
    for (const auto* r : matched) column.push_back(&(*r)[idx]);
    Value v = reduce(agg->transform, column, schema.columns[idx].kind);
    return ResultSet(fp, {FieldUse{agg->column, agg->transform}}, {{std::move(v)}});
  }

  std::vector<FieldUse> header = q.resolved_projection(catalog_);
  std::vector<std::size_t> picks;
  picks.reserve(header.size());
  for (const auto& f : header) picks.push_back(*schema.index_of(f.column.column));

  std::vector<Row> rows;
  rows.reserve(matched.size());
  for (const auto* r : matched) {
    Row out;
    out.reserve(picks.size());
    for (auto i : picks) out.push_back((*r)[i]);
    rows.push_back(std::move(out));
  }
  return ResultSet(fp, std::move(header), std::move(rows));
}

// ---------------------------------------------------------------------------
// Database

Database::Database() : sync_(std::make_unique<Sync>()) {}
Database::Database(Database&&) noexcept = default;
Database& Database::operator=(Database&&) noexcept = default;
Database::~Database() = default;

Database Database::clone() const {
  std::shared_lock lock(sync_->mutex);
  Database copy;
  copy.catalog_ = catalog_;
  copy.tables_ = tables_;
  return copy;
}

const Database::Table& Database::table(std::string_view name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw SchemaError("unknown table " + std::string(name));
  return it->second;
}

void Database::create_table(TableSchema schema) {
  std::unique_lock lock(sync_->mutex);
  Table t;
  if (schema.primary_key) {
    t.keyed = true;
    schema.check();
    t.key_index = *schema.index_of(*schema.primary_key);
  }
  std::string name = schema.name;
  catalog_.add(std::move(schema));
  tables_.emplace(std::move(name), std::move(t));
}

void Database::insert(std::string_view table_name, Row row) {
  std::unique_lock lock(sync_->mutex);
  const TableSchema* schema = catalog_.find(table_name);
  if (schema == nullptr) throw ConstraintError("insert into unknown table " + std::string(table_name));
  if (row.size() != schema->columns.size()) {
    throw KindError("row arity " + std::to_string(row.size()) + " does not match table " +
                    schema->name + " (" + std::to_string(schema->columns.size()) + " columns)");
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    const auto& col = schema->columns[i];
    if (!kind_fits(col.kind, row[i].kind())) {
      throw KindError("column " + schema->name + "." + col.name + " expects " +
                      std::string(to_string(col.kind)) + ", got " +
                      std::string(to_string(row[i].kind())));
    }
    if (col.kind == ValueKind::Float && row[i].kind() == ValueKind::Int) {
      row[i] = Value(row[i].as_float());
    }
  }
  Table& t = tables_.find(table_name)->second;
  if (!t.keyed) {
    t.rows.push_back(std::move(row));
    return;
  }
  const Value& key = row[t.key_index];
  if (key.is_null()) throw ConstraintError("null primary key in " + schema->name);
  auto key_less = [&](const Row& r, const Value& k) { return r[t.key_index] < k; };
  if (t.rows.empty() || t.rows.back()[t.key_index] < key) {
    t.rows.push_back(std::move(row));
    return;
  }
  auto pos = std::lower_bound(t.rows.begin(), t.rows.end(), key, key_less);
  if (pos != t.rows.end() && (*pos)[t.key_index] == key) {
    throw ConstraintError("duplicate key " + key.to_sql() + " in " + schema->name);
  }
  t.rows.insert(pos, std::move(row));
}

ResultSet Database::execute(const Query& q) const {
  std::shared_lock lock(sync_->mutex);
  sync_->executions.fetch_add(1, std::memory_order_relaxed);
  return run(q, false, true);
}

bool Database::exists(const Query& q) const {
  std::shared_lock lock(sync_->mutex);
  sync_->executions.fetch_add(1, std::memory_order_relaxed);
  return !run(q, true, false).empty();
}

std::optional<Row> Database::find(std::string_view table_name, const Value& key) const {
  std::shared_lock lock(sync_->mutex);
  const Table& t = table(table_name);
  if (!t.keyed) throw SchemaError("table " + std::string(table_name) + " has no primary key");
  auto pos = std::lower_bound(t.rows.begin(), t.rows.end(), key,
                              [&](const Row& r, const Value& k) { return r[t.key_index] < k; });
  if (pos == t.rows.end() || !((*pos)[t.key_index] == key)) return std::nullopt;
  return *pos;
}

std::size_t Database::row_count(std::string_view table_name) const {
  std::shared_lock lock(sync_->mutex);
  return table(table_name).rows.size();
}

void Database::for_each_row(std::string_view table_name,
                            const std::function<void(const Row&)>& fn) const {
  std::shared_lock lock(sync_->mutex);
  for (const auto& r : table(table_name).rows) fn(r);
}

}  // namespace ctxpol
