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

#include <fstream>
#include <sstream>

#include "ctxpol/errors.hpp"
#include "ctxpol/relstore.hpp"

namespace ctxpol {

using ojson = nlohmann::ordered_json;

void write_snapshot(const Database& db, std::ostream& out) {
  ojson tables = ojson::array();
  for (const auto& t : db.catalog().tables()) {
    ojson cols = ojson::array();
    for (const auto& c : t.columns) {
      cols.push_back(ojson{{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
    }
    tables.push_back(ojson{{"name", t.name},
                           {"primary_key", t.primary_key ? ojson(*t.primary_key) : ojson(nullptr)},
                           {"columns", std::move(cols)}});
  }
  out << ojson{{"tables", std::move(tables)}}.dump() << '\n';

  for (const auto& t : db.catalog().tables()) {
    db.for_each_row(t.name, [&](const Row& r) {
      ojson obj;
      obj["_table"] = t.name;
      for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i].name] = r[i].to_json();
      out << obj.dump() << '\n';
    });
  }
}

std::string snapshot_text(const Database& db) {
  std::ostringstream out;
  write_snapshot(db, out);
  return out.str();
}

std::uint64_t snapshot_checksum(const Database& db) { return fnv1a(snapshot_text(db)); }

namespace {

ojson parse_line(const std::string& line, std::size_t lineno) {
  try {
    return ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
  }
}

TableSchema parse_table(const ojson& j, std::size_t lineno) {
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string() || !j.contains("columns") ||
      !j["columns"].is_array()) {
    throw ParseError(lineno, "table entry needs 'name' and 'columns'");
  }
  TableSchema t;
  t.name = j["name"].get<std::string>();
  for (const auto& c : j["columns"]) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string() || !c.contains("kind") ||
        !c["kind"].is_string()) {
      throw ParseError(lineno, "column entry of " + t.name + " needs 'name' and 'kind'");
    }
    try {
      t.columns.push_back({c["name"].get<std::string>(), parse_value_kind(c["kind"].get<std::string>())});
    } catch (const KindError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  if (j.contains("primary_key") && !j["primary_key"].is_null()) {
    if (!j["primary_key"].is_string()) throw ParseError(lineno, "primary_key must be a string");
    t.primary_key = j["primary_key"].get<std::string>();
  }
  return t;
}

}  // namespace

Database load_snapshot(std::istream& in) {
  Database db;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing catalog line");
  ++lineno;
  ojson header = parse_line(line, lineno);
  if (!header.is_object() || !header.contains("tables") || !header["tables"].is_array()) {
    throw ParseError(lineno, "catalog line needs a 'tables' array");
  }
  for (const auto& t : header["tables"]) {
    try {
      db.create_table(parse_table(t, lineno));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ojson obj = parse_line(line, lineno);
    if (!obj.is_object() || !obj.contains("_table") || !obj["_table"].is_string()) {
      throw ParseError(lineno, "row needs a '_table' string");
    }
    const std::string name = obj["_table"].get<std::string>();
    const TableSchema* schema = db.catalog().find(name);
    if (schema == nullptr) throw ParseError(lineno, "row for unknown table " + name);
    if (obj.size() != schema->columns.size() + 1) {
      throw ParseError(lineno, "row for " + name + " has the wrong number of fields");
    }
    Row row;
    row.reserve(schema->columns.size());
    try {
      for (const auto& c : schema->columns) {
        if (!obj.contains(c.name)) throw ParseError(lineno, "row for " + name + " lacks " + c.name);
        row.push_back(value_from_json(obj[c.name], c.kind));
      }
      db.insert(name, std::move(row));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return db;
}

Database load_snapshot_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open snapshot " + path);
  return load_snapshot(in);
}

}  // namespace ctxpol
