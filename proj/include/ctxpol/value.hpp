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

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

namespace ctxpol {

enum class ValueKind { Null, Int, Float, Text, Bool };

std::string_view to_string(ValueKind kind);
ValueKind parse_value_kind(std::string_view name);

/// Tagged scalar stored in tables and used as predicate literals.
///
/// Int and Float are mutually comparable; every other cross-kind comparison
/// raises KindError. Comparisons involving Null are handled by the caller
/// (the evaluator treats them as false).
class Value {
 public:
  Value() = default;
  Value(std::nullptr_t) {}
  Value(int v) : data_(static_cast<std::int64_t>(v)) {}
  Value(std::int64_t v) : data_(v) {}
  Value(double v) : data_(v) {}
  Value(bool v) : data_(v) {}
  Value(std::string v) : data_(std::move(v)) {}
  Value(const char* v) : data_(std::string(v)) {}

  ValueKind kind() const noexcept { return static_cast<ValueKind>(data_.index()); }
  bool is_null() const noexcept { return kind() == ValueKind::Null; }
  bool is_numeric() const noexcept {
    return kind() == ValueKind::Int || kind() == ValueKind::Float;
  }

  std::int64_t as_int() const;
  double as_float() const;  // accepts Int too
  const std::string& as_text() const;
  bool as_bool() const;

  /// Three-way compare of two non-null values. Throws KindError on mismatch.
  std::strong_ordering compare(const Value& other) const;

  /// Structural equality: same kind and same payload. Never throws.
  friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

  /// Total order used for map keys and sorting: by kind, then payload.
  friend bool operator<(const Value& a, const Value& b) { return a.data_ < b.data_; }

  /// SQL literal rendering ('text', TRUE, NULL, shortest round-trip floats).
  std::string to_sql() const;

  nlohmann::ordered_json to_json() const;

 private:
  std::variant<std::monostate, std::int64_t, double, std::string, bool> data_;
};

/// Whether a value of `kind` may be stored in a column declared `column_kind`.
bool kind_fits(ValueKind column_kind, ValueKind kind);

/// Converts a JSON scalar into a Value of the requested column kind.
Value value_from_json(const nlohmann::ordered_json& j, ValueKind column_kind);

}  // namespace ctxpol
