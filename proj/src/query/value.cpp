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

#include "ctxpol/value.hpp"

#include <charconv>
#include <cmath>
#include <compare>

#include "ctxpol/errors.hpp"

namespace ctxpol {

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Null: return "null";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Text: return "text";
    case ValueKind::Bool: return "bool";
  }
  return "?";
}

ValueKind parse_value_kind(std::string_view name) {
  if (name == "int") return ValueKind::Int;
  if (name == "float") return ValueKind::Float;
  if (name == "text") return ValueKind::Text;
  if (name == "bool") return ValueKind::Bool;
  throw KindError("unknown value kind '" + std::string(name) + "'");
}

std::int64_t Value::as_int() const {
  if (auto* v = std::get_if<std::int64_t>(&data_)) return *v;
  throw KindError("expected int, got " + std::string(to_string(kind())));
}

double Value::as_float() const {
  if (auto* v = std::get_if<double>(&data_)) return *v;
  if (auto* v = std::get_if<std::int64_t>(&data_)) return static_cast<double>(*v);
  throw KindError("expected number, got " + std::string(to_string(kind())));
}

const std::string& Value::as_text() const {
  if (auto* v = std::get_if<std::string>(&data_)) return *v;
  throw KindError("expected text, got " + std::string(to_string(kind())));
}

bool Value::as_bool() const {
  if (auto* v = std::get_if<bool>(&data_)) return *v;
  throw KindError("expected bool, got " + std::string(to_string(kind())));
}

namespace {

std::strong_ordering compare_doubles(double a, double b) {
  if (a < b) return std::strong_ordering::less;
  if (a > b) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace

std::strong_ordering Value::compare(const Value& other) const {
  if (is_null() || other.is_null()) {
    throw KindError("cannot order null values");
  }
  if (is_numeric() && other.is_numeric()) {
    if (kind() == ValueKind::Int && other.kind() == ValueKind::Int) {
      return as_int() <=> other.as_int();
    }
    return compare_doubles(as_float(), other.as_float());
  }
  if (kind() != other.kind()) {
    throw KindError("cannot compare " + std::string(to_string(kind())) + " with " +
                    std::string(to_string(other.kind())));
  }
  switch (kind()) {
    case ValueKind::Text: {
      int c = as_text().compare(other.as_text());
      return c < 0 ? std::strong_ordering::less
                   : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
    case ValueKind::Bool: return as_bool() <=> other.as_bool();
    default: break;
  }
  return std::strong_ordering::equal;
}

std::string Value::to_sql() const {
  switch (kind()) {
    case ValueKind::Null: return "NULL";
    case ValueKind::Int: return std::to_string(as_int());
    case ValueKind::Float: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), std::get<double>(data_));
      std::string out(buf, end);
      if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
      return out;
    }
    case ValueKind::Text: {
      std::string out = "'";
      for (char c : as_text()) {
        if (c == '\'') out += '\'';
        out += c;
      }
      return out + "'";
    }
    case ValueKind::Bool: return as_bool() ? "TRUE" : "FALSE";
  }
  return "NULL";
}

nlohmann::ordered_json Value::to_json() const {
  switch (kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Int: return as_int();
    case ValueKind::Float: return std::get<double>(data_);
    case ValueKind::Text: return as_text();
    case ValueKind::Bool: return as_bool();
  }
  return nullptr;
}

bool kind_fits(ValueKind column_kind, ValueKind kind) {
  return kind == ValueKind::Null || kind == column_kind ||
         (column_kind == ValueKind::Float && kind == ValueKind::Int);
}

Value value_from_json(const nlohmann::ordered_json& j, ValueKind column_kind) {
  if (j.is_null()) return Value{};
  switch (column_kind) {
    case ValueKind::Int:
      if (j.is_number_integer()) return Value(j.get<std::int64_t>());
      break;
    case ValueKind::Float:
      if (j.is_number()) return Value(j.get<double>());
      break;
    case ValueKind::Text:
      if (j.is_string()) return Value(j.get<std::string>());
      break;
    case ValueKind::Bool:
      if (j.is_boolean()) return Value(j.get<bool>());
      break;
    case ValueKind::Null: break;
  }
  throw KindError("JSON value " + j.dump() + " does not fit column kind " +
                  std::string(to_string(column_kind)));
}

}  // namespace ctxpol
