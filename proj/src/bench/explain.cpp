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
#include <sstream>

#include "ctxpol/bench.hpp"
#include "ctxpol/errors.hpp"

namespace ctxpol {

namespace {

using ojson = nlohmann::ordered_json;

std::optional<std::string> user_header(std::optional<std::int64_t> user) {
  if (!user) return std::nullopt;
  return std::to_string(*user);
}

std::string default_arg(const Scenario& s, const std::string& param, std::optional<std::int64_t> user) {
  if (param == "loc") {
    std::string first;
    if (s.db.catalog().find("EventCalendar")) {
      const std::size_t idx = *s.db.catalog().at("EventCalendar").index_of("location");
      s.db.for_each_row("EventCalendar", [&](const Row& r) {
        if (first.empty() || r[idx].as_text() < first) first = r[idx].as_text();
      });
    }
    return first.empty() ? "nowhere" : first;
  }
  return std::to_string(user.value_or(1));
}

// Generic policies of a phase whose selectors match; shown as suppressed when
// an API-specific policy won.
std::vector<const Policy*> generic_matches(const PolicyRegistry& reg, const std::vector<FieldUse>& fields,
                                           PolicyPhase phase) {
  std::vector<const Policy*> out;
  for (const auto& p : reg.policies()) {
    if (p.phase == phase && !p.api_specific() && selector_matches(p.selector, fields)) out.push_back(&p);
  }
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::vector<std::string> labels(const std::vector<const Policy*>& ps) {
  std::vector<std::string> out;
  for (const Policy* p : ps) out.push_back("#" + std::to_string(p->registration_index) + " " + p->name);
  return out;
}

void note_suppressed(const PolicyRegistry& reg, Explanation& ex) {
  for (const auto& t : ex.traces) {
    Explanation::Suppressed s;
    if (t.pre.kind == SelectionKind::ApiSpecific) s.pre = labels(generic_matches(reg, t.fields, PolicyPhase::Pre));
    if (t.post.kind == SelectionKind::ApiSpecific) {
      s.post = labels(generic_matches(reg, t.fields, PolicyPhase::Post));
    }
    ex.suppressed.push_back(std::move(s));
  }
}

}  // namespace

Explanation explain_endpoint(const Scenario& scenario, const std::string& api, std::optional<std::int64_t> user,
                             const std::optional<std::string>& arg) {
  auto it = std::find_if(scenario.endpoints.begin(), scenario.endpoints.end(),
                         [&](const Endpoint& e) { return e.route.api.name() == api; });
  if (it == scenario.endpoints.end()) throw Error("unknown endpoint '" + api + "' for scenario " + scenario.name);
  if (user && !resolve_user(scenario.db, user_header(user)).authenticated) {
    throw Error("unknown user " + std::to_string(*user));
  }

  std::string path = it->route.path;
  auto open = path.find('{');
  if (open != std::string::npos) {
    const auto close = path.find('}', open);
    const std::string param = path.substr(open + 1, close - open - 1);
    path = path.substr(0, open) + arg.value_or(default_arg(scenario, param, user)) + path.substr(close + 1);
  }
  Request req;
  req.path = path;
  req.user_header = user_header(user);

  // Run the handler with a tracing data access so the traces stay typed.
  auto match = router_for(scenario.endpoints).match(req.method, req.path);
  if (!match) throw Error("no route for " + path);
  Explanation ex;
  ex.scenario = scenario.name;
  ex.request = req.method + " " + req.path;
  ex.user = req.user_header.value_or("anonymous");
  const RequestContext ctx{resolve_user(scenario.db, req.user_header), it->route.api};
  EnforcedAccess access(scenario.registry, scenario.db, ctx, true, &ex.traces);
  try {
    ex.response.body = it->handler(match->params, access);
  } catch (const RequestError& e) {
    ex.response = error_response(400, "bad_request", e.what());
  } catch (const PolicyFault& e) {
    ex.response = error_response(500, "policy_fault", e.what());
  } catch (const FieldScopeError& e) {
    ex.response = error_response(500, "field_scope", e.what());
  }
  note_suppressed(scenario.registry, ex);
  return ex;
}

Explanation explain_table(const Scenario& scenario, const std::string& table, std::optional<std::int64_t> user) {
  if (!scenario.db.catalog().find(table)) throw Error("unknown table '" + table + "'");
  if (user && !resolve_user(scenario.db, user_header(user)).authenticated) {
    throw Error("unknown user " + std::to_string(*user));
  }
  Explanation ex;
  ex.scenario = scenario.name;
  ex.request = table + ".all()";
  ex.user = user ? std::to_string(*user) : "anonymous";
  const RequestContext ctx{resolve_user(scenario.db, user_header(user)), ApiId("explain")};
  EnforcementTrace trace;
  EnforceOptions opts;
  opts.check_field_scope = true;
  opts.trace = &trace;
  ex.response.body = enforce(scenario.registry, scenario.db, Query::all(table), ctx, opts).to_json();
  ex.traces.push_back(std::move(trace));
  note_suppressed(scenario.registry, ex);
  return ex;
}

ojson Explanation::to_json() const {
  ojson traces_json = ojson::array();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    ojson t = traces[i].to_json();
    if (i < suppressed.size()) {
      t["pre"]["suppressed"] = suppressed[i].pre;
      t["post"]["suppressed"] = suppressed[i].post;
    }
    traces_json.push_back(std::move(t));
  }
  return ojson{{"scenario", scenario},
               {"request", request},
               {"user", user},
               {"status", response.status},
               {"traces", std::move(traces_json)},
               {"body", response.body}};
}

std::string Explanation::to_table() const {
  std::ostringstream out;
  out << "request   " << request << "  user " << user << "  scenario " << scenario << "\n";
  out << "status    " << response.status << "\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& t = traces[i];
    std::vector<std::string> fields;
    for (const auto& f : t.fields) fields.push_back(f.to_string());
    out << "query " << i + 1 << "  api " << t.api << "\n";
    out << "  fields      " << join(fields, ", ") << "\n";
    auto phase = [&](const char* label, const EnforcementTrace::Phase& p, const std::vector<std::string>& quiet) {
      std::vector<std::string> names;
      for (std::size_t j = 0; j < p.names.size(); ++j) {
        const bool indexed = p.indices[j] != default_deny_policy().registration_index;
        names.push_back(indexed ? "#" + std::to_string(p.indices[j]) + " " + p.names[j] : p.names[j]);
      }
      out << "  " << label << std::string(12 - std::string(label).size(), ' ') << to_string(p.kind);
      if (!names.empty()) out << "  " << join(names, ", ");
      out << "\n";
      if (!quiet.empty()) out << "  suppressed  " << join(quiet, ", ") << "\n";
    };
    const Suppressed none;
    const Suppressed& sup = i < suppressed.size() ? suppressed[i] : none;
    phase("pre", t.pre, sup.pre);
    phase("post", t.post, sup.post);
    out << "  sql         " << t.sql_before << "\n";
    out << "  rewritten   " << t.sql_after << "\n";
    out << "  rows        " << t.rows_before_post << " before post, " << t.rows_after_post << " after\n";
    out << "  executions  " << t.store_executions << " store, " << t.privileged_calls << " privileged\n";
  }
  return out.str();
}

}  // namespace ctxpol
