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
#include <chrono>
#include <optional>

#include "ctxpol/errors.hpp"
#include "ctxpol/policy.hpp"

namespace ctxpol {

namespace {

// Depth of policy-body invocations on this thread. Non-zero only while the
// engine is running a body.
thread_local int body_depth = 0;

class BodyScope {
 public:
  BodyScope() { ++body_depth; }
  ~BodyScope() { --body_depth; }
  BodyScope(const BodyScope&) = delete;
  BodyScope& operator=(const BodyScope&) = delete;
};

}  // namespace

PrivilegedAccessor PrivilegedAccessor::acquire(const Database& db) {
  if (body_depth == 0) {
    throw CapabilityError("privileged store access is reserved for policy bodies");
  }
  return PrivilegedAccessor(db, nullptr);
}

void PrivilegedAccessor::count() const {
  if (calls_ != nullptr) ++*calls_;
}

ResultSet PrivilegedAccessor::execute(const Query& q) const {
  count();
  return db_->execute(q);
}

bool PrivilegedAccessor::exists(const Query& q) const {
  count();
  return db_->exists(q);
}

std::vector<Value> PrivilegedAccessor::column(const Query& q, const std::string& column) const {
  ResultSet rs = execute(q.values({column}));
  std::vector<Value> out;
  out.reserve(rs.size());
  for (auto& r : rs.rows()) out.push_back(std::move(r.front()));
  return out;
}

nlohmann::ordered_json EnforcementTrace::to_json() const {
  using ojson = nlohmann::ordered_json;
  auto phase_json = [](const Phase& p) {
    ojson selected = ojson::array();
    for (std::size_t i = 0; i < p.indices.size(); ++i) {
      ojson entry{{"name", p.names[i]}};
      if (p.kind == SelectionKind::Default) {
        entry["index"] = nullptr;
      } else {
        entry["index"] = p.indices[i];
      }
      selected.push_back(std::move(entry));
    }
    return ojson{{"selection", std::string(to_string(p.kind))}, {"policies", std::move(selected)}};
  };
  ojson fields_json = ojson::array();
  for (const auto& f : fields) fields_json.push_back(f.to_string());
  return ojson{{"api", api},
               {"user", user},
               {"authenticated", authenticated},
               {"fields", std::move(fields_json)},
               {"pre", phase_json(pre)},
               {"post", phase_json(post)},
               {"sql_before", sql_before},
               {"sql_after", sql_after},
               {"rows_before_post", rows_before_post},
               {"rows_after_post", rows_after_post},
               {"store_executions", store_executions},
               {"privileged_calls", privileged_calls}};
}

class PolicyEngine {
 public:
  PolicyEngine(const PolicyRegistry& registry, const Database& db, const RequestContext& ctx,
               const EnforceOptions& options)
      : registry_(registry), db_(db), ctx_(ctx), options_(options),
        accessor_(db, &privileged_calls_) {}

  ResultSet run(const Query& q) {
    const auto fields = fields_used(q, db_.catalog());
    Selection pre = get_policies(registry_, fields, ctx_.api, PolicyPhase::Pre, true);

    std::optional<Query> rewritten;
    for (const Policy* p : pre.policies) rewritten = apply_pre(*p, rewritten ? *rewritten : q);
    const Query& final_query = rewritten ? *rewritten : q;

    ResultSet result;
    if (options_.store_time != nullptr) {
      const auto start = std::chrono::steady_clock::now();
      result = db_.execute(final_query);
      *options_.store_time = std::chrono::steady_clock::now() - start;
    } else {
      result = db_.execute(final_query);
    }
    const std::size_t rows_before = result.size();

    Selection post = get_policies(registry_, fields, ctx_.api, PolicyPhase::Post, false);
    for (const Policy* p : post.policies) result = apply_post(*p, std::move(result));

    if (auto* t = options_.trace) {
      t->api = ctx_.api.name();
      t->user = ctx_.user.id;
      t->authenticated = ctx_.user.authenticated;
      t->fields = fields;
      t->pre = describe(pre);
      t->post = describe(post);
      t->sql_before = to_sql(q, db_.catalog());
      t->sql_after = to_sql(final_query, db_.catalog());
      t->rows_before_post = rows_before;
      t->rows_after_post = result.size();
      t->store_executions = 1;
      t->privileged_calls = privileged_calls_;
    }
    return result;
  }

 private:
  static EnforcementTrace::Phase describe(const Selection& s) {
    EnforcementTrace::Phase out;
    out.kind = s.kind;
    for (const Policy* p : s.policies) {
      out.indices.push_back(p->registration_index);
      out.names.push_back(p->name);
    }
    return out;
  }

  [[noreturn]] static void fault(const Policy& p, const char* what) {
    throw PolicyFault("policy '" + p.name + "' (#" + std::to_string(p.registration_index) +
                      ") failed: " + what);
  }

  Query apply_pre(const Policy& p, const Query& q) {
    std::optional<Query> out;
    try {
      BodyScope scope;
      out.emplace(p.pre(q, ctx_, accessor_));
    } catch (const std::exception& e) {
      fault(p, e.what());
    }
    if (out->base() != q.base()) fault(p, "pre-eval body changed the base table");
    return std::move(*out);
  }

  ResultSet apply_post(const Policy& p, ResultSet in) {
    ResultSet before;
    if (options_.check_field_scope) before = in;
    std::optional<ResultSet> out;
    try {
      BodyScope scope;
      out.emplace(p.post(std::move(in), ctx_, accessor_));
    } catch (const std::exception& e) {
      fault(p, e.what());
    }
    if (options_.check_field_scope) check_scope(p, before, *out);
    return std::move(*out);
  }

  // Columns outside the selector must be unchanged and rows may only be
  // dropped, never added. A message result may replace anything.
  static void check_scope(const Policy& p, const ResultSet& before, const ResultSet& after) {
    if (after.is_message()) return;
    auto violation = [&](const std::string& why) {
      throw FieldScopeError("post-eval policy '" + p.name + "' " + why);
    };
    if (after.header() != before.header()) violation("changed the result header");
    if (after.size() > before.size()) violation("added rows");

    std::vector<std::size_t> frozen;
    for (std::size_t i = 0; i < before.header().size(); ++i) {
      if (!p.selector.covers_column(before.header()[i].column)) frozen.push_back(i);
    }
    auto same_frozen = [&](const Row& a, const Row& b) {
      return std::all_of(frozen.begin(), frozen.end(), [&](std::size_t i) { return a[i] == b[i]; });
    };
    // Every output row must correspond, in order, to an input row that agrees
    // on the frozen columns.
    std::size_t j = 0;
    for (const auto& row : after.rows()) {
      while (j < before.size() && !same_frozen(before.rows()[j], row)) ++j;
      if (j == before.size()) violation("modified columns outside its selector");
      ++j;
    }
  }

  const PolicyRegistry& registry_;
  const Database& db_;
  const RequestContext& ctx_;
  const EnforceOptions& options_;
  std::uint64_t privileged_calls_ = 0;
  PrivilegedAccessor accessor_;
};

ResultSet enforce(const PolicyRegistry& registry, const Database& db, const Query& q,
                  const RequestContext& ctx, const EnforceOptions& options) {
  return PolicyEngine(registry, db, ctx, options).run(q);
}

}  // namespace ctxpol
