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

// Contextual, API-aware data policies.
//
// A policy is attached to a selector (columns, transformed columns, or whole
// tables), runs either before evaluation (rewriting the query) or after it
// (rewriting the result), and may be restricted to a list of APIs. When an
// API-specific policy of a phase matches a request, it replaces every generic
// policy of that phase. When nothing matches in the pre phase, the query is
// answered with no rows.

#pragma once

#include <compare>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxpol/query.hpp"
#include "ctxpol/relstore.hpp"

namespace ctxpol {

enum class PolicyPhase { Pre, Post };

std::string_view to_string(PolicyPhase phase);

/// Endpoint handler name identifying the API a request came through.
class ApiId {
 public:
  explicit ApiId(std::string name);
  const std::string& name() const noexcept { return name_; }
  friend auto operator<=>(const ApiId&, const ApiId&) = default;
  friend bool operator==(const ApiId&, const ApiId&) = default;

 private:
  std::string name_;
};

/// One selector element: a (possibly transformed) column or `Table.*`.
class SelectorEntry {
 public:
  static SelectorEntry column(FieldUse field);
  static SelectorEntry wildcard(std::string table);
  /// "User.name", "Avg(Payroll.salary)" or "EventCalendar.*".
  static SelectorEntry parse(std::string_view text);

  bool is_wildcard() const noexcept { return wildcard_; }
  const std::string& table() const noexcept { return field_.column.table; }
  const FieldUse& field() const noexcept { return field_; }
  std::string to_string() const;

  friend auto operator<=>(const SelectorEntry&, const SelectorEntry&) = default;
  friend bool operator==(const SelectorEntry&, const SelectorEntry&) = default;

 private:
  SelectorEntry() = default;
  bool wildcard_ = false;
  FieldUse field_;
};

/// Non-empty, duplicate-free set of selector entries.
class Selector {
 public:
  Selector(std::initializer_list<std::string_view> specs);
  explicit Selector(std::vector<SelectorEntry> entries);

  const std::vector<SelectorEntry>& entries() const noexcept { return entries_; }

  /// Whether a post-eval body may write the given result column.
  bool covers_column(const ColumnRef& column) const;
  std::string to_string() const;

 private:
  std::vector<SelectorEntry> entries_;  // sorted
};

/// True when every selector entry is used by the query's field set:
///  - a plain column entry matches any use of that column, transformed or not;
///  - a transformed entry matches only the identical transformed use;
///  - a wildcard matches any use of its table.
/// `fields` must be sorted (as produced by fields_used).
bool selector_matches(const Selector& selector, std::span<const FieldUse> fields);

struct UserContext {
  std::int64_t id = 0;
  bool authenticated = false;
  std::map<std::string, Value, std::less<>> attributes;

  static UserContext anonymous() { return {}; }
  /// Null when the attribute is absent.
  const Value& attribute(std::string_view name) const;
};

struct RequestContext {
  UserContext user;
  ApiId api;
};

class PolicyEngine;

/// Store access for policy bodies. Bypasses enforcement, so it is only
/// handed out by the engine while a body runs.
class PrivilegedAccessor {
 public:
  /// Returns an accessor when called from inside a running policy body on
  /// this thread; throws CapabilityError anywhere else.
  static PrivilegedAccessor acquire(const Database& db);

  ResultSet execute(const Query& q) const;
  bool exists(const Query& q) const;
  /// Values of one column of `q`, in result order.
  std::vector<Value> column(const Query& q, const std::string& column) const;

 private:
  friend class PolicyEngine;
  PrivilegedAccessor(const Database& db, std::uint64_t* calls) : db_(&db), calls_(calls) {}
  void count() const;

  const Database* db_;
  std::uint64_t* calls_;
};

using PreBody =
    std::function<Query(const Query&, const RequestContext&, const PrivilegedAccessor&)>;
using PostBody =
    std::function<ResultSet(ResultSet, const RequestContext&, const PrivilegedAccessor&)>;

struct Policy {
  std::string name;
  Selector selector;
  PolicyPhase phase = PolicyPhase::Pre;
  /// Absent: applies to every API.
  std::optional<std::vector<ApiId>> apis;
  PreBody pre;
  PostBody post;
  std::size_t registration_index = 0;

  bool api_specific() const noexcept { return apis.has_value(); }
  bool lists_api(const ApiId& api) const;
};

/// Ordered policy store. Populated at startup, then sealed.
class PolicyRegistry {
 public:
  /// Appends with the next registration index. Throws RegistryError once sealed.
  const Policy& add(Policy p);
  const Policy& add_pre(std::string name, Selector selector, PreBody body,
                        std::optional<std::vector<ApiId>> apis = std::nullopt);
  const Policy& add_post(std::string name, Selector selector, PostBody body,
                         std::optional<std::vector<ApiId>> apis = std::nullopt);

  void seal() noexcept { sealed_ = true; }
  bool sealed() const noexcept { return sealed_; }
  const std::vector<Policy>& policies() const noexcept { return policies_; }
  std::size_t size() const noexcept { return policies_.size(); }

 private:
  std::vector<Policy> policies_;
  bool sealed_ = false;
};

/// How a phase's policy list was chosen.
enum class SelectionKind { ApiSpecific, Generic, Default, Empty };

std::string_view to_string(SelectionKind kind);

struct Selection {
  SelectionKind kind = SelectionKind::Empty;
  std::vector<const Policy*> policies;  // registration order
};

/// The fail-closed policy used when no pre-eval policy matches.
const Policy& default_deny_policy();

/// Answers every query with no rows.
Query default_deny(const Query& q);

/// Policy selection for one phase. API-specific matches win over generic
/// ones; with neither, `use_default` picks the default-deny policy.
/// Throws RegistryError when the registry is not sealed.
Selection get_policies(const PolicyRegistry& registry, std::span<const FieldUse> fields,
                       const ApiId& api, PolicyPhase phase, bool use_default);

/// Intermediate state of one enforcement, for explain output and tests.
struct EnforcementTrace {
  struct Phase {
    SelectionKind kind = SelectionKind::Empty;
    std::vector<std::size_t> indices;
    std::vector<std::string> names;
  };

  std::string api;
  std::int64_t user = 0;
  bool authenticated = false;
  std::vector<FieldUse> fields;
  Phase pre;
  Phase post;
  std::string sql_before;
  std::string sql_after;
  std::size_t rows_before_post = 0;
  std::size_t rows_after_post = 0;
  std::uint64_t store_executions = 0;
  std::uint64_t privileged_calls = 0;

  nlohmann::ordered_json to_json() const;
};

struct EnforceOptions {
  /// Reject post-eval bodies that write outside their selector or add rows.
  bool check_field_scope = false;
  EnforcementTrace* trace = nullptr;
  /// Receives the time spent in the single store execution.
  std::chrono::nanoseconds* store_time = nullptr;
};

/// Runs a query under the registry's policies: extract fields, apply the
/// selected pre-eval bodies, execute once, apply the selected post-eval
/// bodies. Body failures surface as PolicyFault.
ResultSet enforce(const PolicyRegistry& registry, const Database& db, const Query& q,
                  const RequestContext& ctx, const EnforceOptions& options = {});

}  // namespace ctxpol
