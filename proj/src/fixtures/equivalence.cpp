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
#include <random>
#include <sstream>

#include "ctxpol/fixtures.hpp"

namespace ctxpol {

std::map<std::string, Backend> baseline_backends(const Scenario& scenario) {
  std::map<std::string, Backend> out;
  for (const auto& [api, handler] : scenario.baseline) {
    out.emplace(api, [&db = scenario.db, handler = handler](const Params& p, const RequestContext& ctx,
                                                           std::vector<EnforcementTrace>*) {
      return handler(p, ctx.user, db);
    });
  }
  return out;
}

namespace {

std::vector<std::int64_t> user_ids(const Database& db) {
  std::vector<std::int64_t> ids;
  if (!db.catalog().find("User")) return ids;
  db.for_each_row("User", [&](const Row& r) { ids.push_back(r[0].as_int()); });
  return ids;
}

std::vector<std::string> locations(const Database& db) {
  std::vector<std::string> out;
  if (!db.catalog().find("EventCalendar")) return out;
  const std::size_t idx = *db.catalog().at("EventCalendar").index_of("location");
  db.for_each_row("EventCalendar", [&](const Row& r) { out.push_back(r[idx].as_text()); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::int64_t> followed_by(const Database& db, std::int64_t uid) {
  std::vector<std::int64_t> out;
  if (!db.catalog().find("Follow")) return out;
  db.for_each_row("Follow", [&](const Row& r) {
    if (r[1] == Value(uid)) out.push_back(r[2].as_int());
  });
  return out;
}

}  // namespace

std::vector<Request> sample_requests(const Scenario& scenario, std::size_t users, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> ids = user_ids(scenario.db);
  std::shuffle(ids.begin(), ids.end(), rng);
  if (ids.size() > users) ids.resize(users);
  std::sort(ids.begin(), ids.end());

  std::vector<std::optional<std::int64_t>> who{std::nullopt};
  for (auto id : ids) who.emplace_back(id);

  const auto locs = locations(scenario.db);
  const auto everyone = user_ids(scenario.db);
  std::vector<Request> out;
  for (const auto& u : who) {
    Request base;
    if (u) base.user_header = std::to_string(*u);
    for (const auto& e : scenario.endpoints) {
      const std::string& path = e.route.path;
      auto brace = path.find('{');
      if (brace == std::string::npos) {
        Request r = base;
        r.path = path;
        out.push_back(std::move(r));
        continue;
      }
      const std::string prefix = path.substr(0, brace);
      const std::string param = path.substr(brace + 1, path.find('}') - brace - 1);
      std::vector<std::string> values;
      if (param == "loc") {
        if (!locs.empty()) values.push_back(locs[rng() % locs.size()]);
        values.push_back("nowhere");
      } else if (param == "uid") {
        // A followed user and an arbitrary one.
        if (u) {
          auto f = followed_by(scenario.db, *u);
          if (!f.empty()) values.push_back(std::to_string(f[rng() % f.size()]));
        }
        if (!everyone.empty()) values.push_back(std::to_string(everyone[rng() % everyone.size()]));
      }
      for (const auto& v : values) {
        Request r = base;
        r.path = prefix + v;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

EquivalenceReport equivalence_report(const Scenario& scenario, const std::vector<Request>& requests,
                                     const PolicyRegistry* registry) {
  const PolicyRegistry& reg = registry ? *registry : scenario.registry;
  Service enforced(scenario.db, router_for(scenario.endpoints),
                   enforced_backends(scenario.endpoints, reg, scenario.db));
  Service baseline(scenario.db, router_for(scenario.endpoints), baseline_backends(scenario));

  EquivalenceReport report;
  report.scenario = scenario.name;
  for (const auto& req : requests) {
    Response a = enforced.dispatch(req);
    Response b = baseline.dispatch(req);
    auto match = enforced.router().match(req.method, req.path);
    const std::string api = match ? match->route->api.name() : "?";
    ++report.requests;
    ++report.per_api[api];
    if (a.status >= 500 || b.status >= 500) ++report.server_errors;
    std::string ta = a.body_text();
    std::string tb = b.body_text();
    if (a.status != b.status || ta != tb) {
      report.mismatches.push_back(Mismatch{api, req.path, req.user_header.value_or("anonymous"),
                                           a.status, b.status, std::move(ta), std::move(tb)});
    }
  }
  return report;
}

nlohmann::ordered_json EquivalenceReport::to_json() const {
  using ojson = nlohmann::ordered_json;
  ojson mism = ojson::array();
  for (const auto& m : mismatches) {
    mism.push_back(ojson{{"api", m.api},
                         {"path", m.path},
                         {"user", m.user},
                         {"enforced_status", m.enforced_status},
                         {"baseline_status", m.baseline_status},
                         {"enforced", m.enforced},
                         {"baseline", m.baseline}});
  }
  ojson apis = ojson::object();
  for (const auto& [api, n] : per_api) apis[api] = n;
  return ojson{{"scenario", scenario},
               {"requests", requests},
               {"mismatch_count", mismatches.size()},
               {"server_errors", server_errors},
               {"ok", ok()},
               {"requests_per_api", std::move(apis)},
               {"mismatches", std::move(mism)}};
}

std::string EquivalenceReport::to_table() const {
  std::ostringstream out;
  out << "scenario " << scenario << ": " << requests << " requests, " << mismatches.size()
      << " mismatches, " << server_errors << " server errors\n";
  for (const auto& [api, n] : per_api) {
    std::size_t bad = std::count_if(mismatches.begin(), mismatches.end(),
                                    [&](const Mismatch& m) { return m.api == api; });
    out << "  " << api << std::string(api.size() < 22 ? 22 - api.size() : 1, ' ') << n
        << " requests  " << bad << " mismatches\n";
  }
  for (const auto& m : mismatches) {
    out << "  MISMATCH " << m.api << " " << m.path << " user=" << m.user << "\n";
  }
  return out.str();
}

}  // namespace ctxpol
