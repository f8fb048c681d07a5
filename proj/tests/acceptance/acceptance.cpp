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

// Acceptance criteria AC1..AC10. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. `acceptance 3 7` runs a subset.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "ctxpol/bench.hpp"
#include "ctxpol/errors.hpp"
#include "naive_interpreter.hpp"
#include "test_schemas.hpp"

namespace ctxpol {
namespace {

using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Collects failed expectations; the first few are reported.
struct Check {
  std::vector<std::string> failures;
  std::ostringstream notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  bool ok() const { return failures.empty(); }
  std::string detail() const {
    std::string out = notes.str();
    for (std::size_t i = 0; i < failures.size() && i < 5; ++i) out += "\n    - " + failures[i];
    if (failures.size() > 5) out += "\n    - ... " + std::to_string(failures.size() - 5) + " more";
    return out;
  }
};

Scenario small(const std::string& name) {
  ScenarioOptions o;
  o.fixture = FixtureKind::Small;
  return load_scenario(name, o);
}

Service enforced_service(const Scenario& s, bool debug = false) {
  ServiceOptions o;
  o.debug_trace = debug;
  return Service(s.db, router_for(s.endpoints), enforced_backends(s.endpoints, s.registry, s.db), o);
}

Request get(std::string path, std::optional<std::string> user = std::nullopt) {
  Request r;
  r.path = std::move(path);
  r.user_header = std::move(user);
  return r;
}

// ---------------------------------------------------------------------------

Check ac1_oracle_equivalence() {
  Check c;
  const auto start = Clock::now();
  for (const char* name : {"intranet", "social"}) {
    Scenario s = load_scenario(name);
    auto requests = sample_requests(s, 50, 2026);
    std::set<std::string> users;
    for (const auto& r : requests) users.insert(r.user_header.value_or(""));
    EquivalenceReport report = equivalence_report(s, requests);
    c.notes << name << ": " << report.requests << " requests, " << users.size() << " users, "
            << report.mismatches.size() << " mismatches; ";
    c.expect(users.size() == 51, std::string(name) + ": expected 50 users plus anonymous");
    c.expect(report.per_api.size() == s.endpoints.size(), std::string(name) + ": an endpoint was not exercised");
    c.expect(report.server_errors == 0, std::string(name) + ": server errors");
    for (const auto& m : report.mismatches) {
      c.expect(false, std::string(name) + " " + m.api + " " + m.path + " user=" + m.user);
    }
  }
  const double t = seconds_since(start);
  c.notes << "runtime " << t << " s";
  c.expect(t < 60.0, "runtime over 60 s");
  return c;
}

Check ac2_worked_examples() {
  Check c;
  auto expect_body = [&](const Service& svc, const Request& r, const std::string& want) {
    const std::string got = svc.dispatch(r).body_text();
    c.expect(got == want, r.path + " user=" + r.user_header.value_or("anon") + ": got " + got);
  };

  // Example 1.
  Scenario intranet = small("intranet");
  Service svc = enforced_service(intranet);
  expect_body(svc, get("/users", "1"),
              R"([{"id":1,"name":"Ann","age":41,"address":"1 Elm St, Northside, Springfield","dept":"Eng"}])");
  expect_body(svc, get("/users", "4"),
              R"([{"id":1,"name":"Ann","age":41,"address":"Springfield","dept":"Eng"},)"
              R"({"id":2,"name":"Bo","age":29,"address":"Springfield","dept":"Transportation"},)"
              R"({"id":3,"name":"Cy","age":52,"address":"Shelbyville","dept":"Eng"},)"
              R"({"id":4,"name":"Di","age":35,"address":"7 Ash Ln, Old Town, Shelbyville","dept":"HR"}])");

  // Non-manager average, against a hand computation over the fixture rows.
  double sum = 0;
  int n = 0;
  std::set<std::int64_t> managers;
  intranet.db.for_each_row("Payroll", [&](const Row& r) { managers.insert(r[1].as_int()); });
  intranet.db.for_each_row("Payroll", [&](const Row& r) {
    if (!managers.count(r[0].as_int())) {
      sum += r[2].as_float();
      ++n;
    }
  });
  const double oracle = sum / n;
  const ojson avg = svc.dispatch(get("/payroll/average", "2")).body;
  c.expect(oracle == 80.0, "oracle average is " + std::to_string(oracle));
  c.expect(avg.is_number() && avg.get<double>() == oracle, "non-manager average: got " + avg.dump());

  // Example 2: friends variant and department variant.
  expect_body(svc, get("/addresses", "1"),
              R"([{"id":1,"name":"Ann","address":"1 Elm St, Northside, Springfield"},)"
              R"({"id":2,"name":"Bo","address":"Riverside, Springfield"},)"
              R"({"id":3,"name":"Cy","address":"Shelbyville"},)"
              R"({"id":4,"name":"Di","address":"Shelbyville"}])");
  Scenario dept = small("intranet-dept");
  Service dsvc = enforced_service(dept);
  expect_body(dsvc, get("/addresses", "2"),
              R"([{"id":1,"name":"Ann","address":"Northside, Springfield"},)"
              R"({"id":2,"name":"Bo","address":"9 Oak Ave, Riverside, Springfield"},)"
              R"({"id":3,"name":"Cy","address":"Hilltop, Shelbyville"},)"
              R"({"id":4,"name":"Di","address":"Old Town, Shelbyville"}])");
  expect_body(dsvc, get("/addresses", "1"),
              R"([{"id":1,"name":"Ann","address":"1 Elm St, Northside, Springfield"},)"
              R"({"id":2,"name":"Bo","address":"Springfield"},)"
              R"({"id":3,"name":"Cy","address":"Shelbyville"},)"
              R"({"id":4,"name":"Di","address":"Shelbyville"}])");

  // Example 3.
  const std::string e1 = R"({"eid":1,"date":"2026-03-02","location":"A","orgid":1,"event":"Standup"})";
  const std::string e2 = R"({"eid":2,"date":"2026-03-03","location":"A","orgid":2,"event":"Budget"})";
  const std::string e2_masked =
      R"({"eid":2,"date":"2026-03-03","location":"A","orgid":0,"event":"Private event"})";
  expect_body(svc, get("/events", "1"), "[" + e1 + "]");
  expect_body(svc, get("/events", "2"), "[" + e1 + "," + e2 + "]");
  expect_body(svc, get("/events/deletable", "1"), "[" + e1 + "]");
  expect_body(svc, get("/events/deletable", "2"), "[" + e2 + "]");
  expect_body(svc, get("/events/location/A", "1"), "[" + e1 + "," + e2_masked + "]");
  expect_body(svc, get("/events/location/A", "2"), "[" + e1 + "," + e2 + "]");
  c.notes << "Examples 1-3 checked on the small fixtures";
  return c;
}

// Queries touching only columns no intranet policy names.
Query random_uncovered_query(std::mt19937_64& rng) {
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  struct Shape {
    const char* table;
    std::vector<std::string> columns;
    std::vector<std::string> text_columns;
  };
  static const std::vector<Shape> shapes{
      {"Friends", {"id", "uid", "fid"}, {}},
      {"Invitee", {"eid", "empid"}, {}},
      {"User", {"id"}, {"dept"}},
      {"Payroll", {"id", "mgid"}, {}},
  };
  static const char* ops[] = {"", "__ne", "__lt", "__lte", "__gt", "__gte"};
  static const char* depts[] = {"HR", "Eng", "Sales", "Finance", "Transportation"};
  const Shape& s = shapes[pick(shapes.size())];
  Query q = Query::all(s.table);
  const int steps = static_cast<int>(pick(4));
  for (int i = 0; i < steps; ++i) {
    const bool text = !s.text_columns.empty() && pick(3) == 0;
    const std::string col = text ? s.text_columns[pick(s.text_columns.size())] : s.columns[pick(s.columns.size())];
    Value v = text ? Value(depts[pick(5)]) : Value(static_cast<std::int64_t>(pick(250)));
    const std::string lookup = col + (text ? "" : ops[pick(6)]);
    if (pick(5) == 0 && !text) {
      Query sub = Query::all("Friends").filter("uid", Value(static_cast<std::int64_t>(pick(200) + 1)));
      q = pick(2) ? q.filter(col + "__in", sub.values({"fid"})) : q.exclude(col + "__in", sub.values({"fid"}));
    } else {
      q = pick(2) ? q.filter(lookup, v) : q.exclude(lookup, v);
    }
  }
  std::vector<std::string> all = s.columns;
  all.insert(all.end(), s.text_columns.begin(), s.text_columns.end());
  // Always project: the full-row form would read covered columns too.
  std::vector<std::string> proj;
  for (const auto& col : all) {
    if (pick(2)) proj.push_back(col);
  }
  q = q.values(proj.empty() ? all : proj);
  if (pick(20) == 0) q = q.none();
  return q;
}

Check ac3_default_deny() {
  Check c;
  Scenario s = load_scenario("intranet");
  std::mt19937_64 rng(303);
  const std::vector<std::string> apis{"friend_ages", "list_users", "avg_salary", "list_addresses",
                                      "get_events", "delete_events", "get_location_events", "other"};
  std::size_t nonempty_raw = 0;
  for (int i = 0; i < 1000; ++i) {
    Query q = random_uncovered_query(rng);
    const auto uid = static_cast<std::int64_t>(rng() % 201);
    RequestContext ctx{resolve_user(s.db, std::to_string(uid)), ApiId(apis[rng() % apis.size()])};
    EnforcementTrace trace;
    EnforceOptions opts;
    opts.trace = &trace;
    ResultSet rs = enforce(s.registry, s.db, q, ctx, opts);
    if (!s.db.execute(q).empty()) ++nonempty_raw;
    const std::string sql = to_sql(q, s.db.catalog());
    c.expect(rs.empty(), "rows returned for " + sql);
    c.expect(trace.pre.kind == SelectionKind::Default, "default policy not selected for " + sql);
  }
  c.notes << "1000 queries, " << nonempty_raw << " of them non-empty without enforcement";
  c.expect(nonempty_raw > 300, "generator too weak: few queries have rows to hide");
  return c;
}

Check ac4_implicit_leak() {
  Check c;
  std::vector<std::string> invoked;
  PolicyRegistry r;
  r.add_pre("name", {"User.name"}, [&](const Query& q, const RequestContext&, const PrivilegedAccessor&) {
    invoked.push_back("name");
    return q;
  });
  r.add_pre("name+age", {"User.name", "User.age"},
            [&](const Query& q, const RequestContext& ctx, const PrivilegedAccessor&) {
              invoked.push_back("name+age");
              return q.filter("id", Value(ctx.user.id));
            });
  r.seal();
  Database db = testing::tiny_intranet();
  const Query q = Query::all("User").values({"name"}).filter("age__gt", Value(30));
  RequestContext ctx{resolve_user(db, "3"), ApiId("list_names")};
  ResultSet rs = enforce(r, db, q, ctx);
  c.expect(rs.to_json().dump() == R"([{"name":"Cy"}])", "got " + rs.to_json().dump());
  c.expect(invoked == std::vector<std::string>{"name", "name+age"}, "joint policy not invoked");
  c.expect(db.execute(q).size() == 3, "unenforced query should see three names");

  // A requester outside the filter sees nothing.
  RequestContext young{resolve_user(db, "2"), ApiId("list_names")};
  c.expect(enforce(r, db, q, young).empty(), "user 2 should see no rows");
  c.notes << "name projection filtered on age returns only the requester's row";
  return c;
}

// Wraps every body of a registry so each invocation is logged.
PolicyRegistry instrumented(const PolicyRegistry& reg, std::vector<std::size_t>& log) {
  PolicyRegistry out;
  for (Policy p : reg.policies()) {
    const std::size_t idx = p.registration_index;
    if (p.pre) {
      p.pre = [inner = p.pre, idx, &log](const Query& q, const RequestContext& ctx, const PrivilegedAccessor& a) {
        log.push_back(idx);
        return inner(q, ctx, a);
      };
    }
    if (p.post) {
      p.post = [inner = p.post, idx, &log](ResultSet rs, const RequestContext& ctx, const PrivilegedAccessor& a) {
        log.push_back(idx);
        return inner(std::move(rs), ctx, a);
      };
    }
    out.add(std::move(p));
  }
  out.seal();
  return out;
}

// DataAccess that enforces with a trace and hands each enforcement's trace
// and body log to a callback.
struct ObservedAccess : DataAccess {
  const PolicyRegistry* registry;
  const Database* db;
  const RequestContext* ctx;
  std::vector<std::size_t>* log;
  std::function<void(const EnforcementTrace&, const std::vector<std::size_t>&)> observe;

  ResultSet fetch(const Query& q) override {
    log->clear();
    EnforcementTrace trace;
    EnforceOptions opts;
    opts.trace = &trace;
    ResultSet rs = enforce(*registry, *db, q, *ctx, opts);
    observe(trace, *log);
    return rs;
  }
};

void for_each_fixture_request(const std::function<void(const Scenario&, const Endpoint&, const Params&,
                                                       const RequestContext&)>& visit) {
  for (const char* name : {"intranet", "intranet-dept", "social"}) {
    for (FixtureKind kind : {FixtureKind::Seeded, FixtureKind::Small}) {
      ScenarioOptions o;
      o.fixture = kind;
      Scenario s = load_scenario(name, o);
      Router router = router_for(s.endpoints);
      for (const auto& req : sample_requests(s, 50, 77)) {
        auto m = router.match(req.method, req.path);
        for (const auto& e : s.endpoints) {
          if (e.route.api == m->route->api) {
            visit(s, e, m->params, RequestContext{resolve_user(s.db, req.user_header), e.route.api});
          }
        }
      }
    }
  }
}

Check ac5_override_exclusivity() {
  Check c;
  std::size_t specific = 0;
  std::size_t enforcements = 0;
  for_each_fixture_request([&](const Scenario& s, const Endpoint& e, const Params& params, const RequestContext& ctx) {
    std::vector<std::size_t> log;
    PolicyRegistry reg = instrumented(s.registry, log);
    ObservedAccess access;
    access.registry = &reg;
    access.db = &s.db;
    access.ctx = &ctx;
    access.log = &log;
    access.observe = [&](const EnforcementTrace& t, const std::vector<std::size_t>& bodies) {
      ++enforcements;
      for (auto [phase, kind] : {std::pair{PolicyPhase::Pre, t.pre.kind}, std::pair{PolicyPhase::Post, t.post.kind}}) {
        if (kind != SelectionKind::ApiSpecific) continue;
        ++specific;
        for (std::size_t idx : bodies) {
          const Policy& p = reg.policies()[idx];
          c.expect(!(p.phase == phase && !p.api_specific()),
                   s.name + " " + e.route.api.name() + ": generic body '" + p.name + "' ran");
        }
      }
    };
    try {
      e.handler(params, access);
    } catch (const RequestError&) {
    }
  });
  c.notes << enforcements << " enforcements, " << specific << " phases with an API-specific match";
  c.expect(specific > 100, "too few API-specific selections to be meaningful");
  return c;
}

Check ac6_single_query() {
  Check c;
  std::map<std::string, std::size_t> pre_only_requests;
  for (const char* name : {"intranet", "intranet-dept", "social"}) {
    Scenario s = load_scenario(name);
    Service svc = enforced_service(s, true);
    for (const auto& req : sample_requests(s, 50, 66)) {
      const std::uint64_t before = s.db.execution_count();
      Response r = svc.dispatch(req);
      const std::uint64_t delta = s.db.execution_count() - before;
      const ojson traces = ojson::parse(*r.trace_header);
      std::uint64_t privileged = 0;
      bool pre_only = true;
      for (const auto& t : traces) {
        privileged += t["privileged_calls"].get<std::uint64_t>();
        pre_only = pre_only && t["post"]["selection"] == "none";
      }
      const std::uint64_t direct = delta - privileged;
      c.expect(direct == traces.size(), req.path + ": " + std::to_string(direct) + " non-privileged executions for " +
                                            std::to_string(traces.size()) + " queries");
      if (pre_only && traces.size() == 1) {
        ++pre_only_requests[traces[0]["api"].get<std::string>()];
        c.expect(direct == 1, req.path + ": pre-only request executed " + std::to_string(direct) + " times");
      }
    }
  }
  c.notes << "pre-only requests:";
  for (const auto& [api, n] : pre_only_requests) c.notes << " " << api << "=" << n;
  c.expect(pre_only_requests.size() >= 4, "expected at least four pre-only endpoints");
  return c;
}

Check ac7_relstore() {
  Check c;
  testing::QueryFuzzer fuzz(7007);
  std::size_t pairs = 0;
  std::size_t nonempty = 0;
  for (; pairs < 10000; ++pairs) {
    auto ndb = fuzz.random_db(60);
    Database db = ndb.to_database();
    Query q = fuzz.random_query(ndb, 3);
    std::string why;
    const ResultSet rs = db.execute(q);
    if (!rs.empty()) ++nonempty;
    if (!testing::same_result(testing::to_naive(rs), ndb.run(q), &why)) {
      c.expect(false, to_sql(q, db.catalog()) + ": " + why);
    }
  }

  // Aggregate against a mean computed from the plain column.
  testing::QueryFuzzer agg(7008);
  std::size_t means = 0;
  double worst = 0;
  while (means < 500) {
    auto ndb = agg.random_db(80);
    Database db = ndb.to_database();
    Query q = agg.random_query(ndb, 2);
    if (q.aggregation() || q.base() != "T1") continue;
    Query plain = Query::all("T1").filter(q.predicate());
    double sum = 0;
    std::int64_t n = 0;
    const ResultSet col = db.execute(plain.values({"b"}));
    for (const auto& r : col.rows()) {
      if (r[0].is_null()) continue;
      sum += r[0].as_float();
      ++n;
    }
    const Value avg = db.execute(plain.aggregate(Transform::Avg, "b")).rows()[0][0];
    if (n == 0) {
      c.expect(avg.is_null(), "average over no values is not null");
    } else {
      const double mean = sum / static_cast<double>(n);
      const double err = std::abs(avg.as_float() - mean) / std::max(1.0, std::abs(mean));
      worst = std::max(worst, err);
      c.expect(err <= 1e-9, "average off by " + std::to_string(err));
    }
    ++means;
  }

  // Snapshot round trip on random stores and on every seeded scenario.
  testing::QueryFuzzer snap(7009);
  std::size_t trips = 0;
  auto round_trip = [&](const Database& db, const std::string& what) {
    const std::string text = snapshot_text(db);
    std::istringstream in(text);
    Database back = load_snapshot(in);
    c.expect(snapshot_text(back) == text, what + ": snapshot text changed");
    c.expect(snapshot_checksum(back) == snapshot_checksum(db), what + ": checksum changed");
    ++trips;
  };
  for (int i = 0; i < 200; ++i) round_trip(snap.random_db(40).to_database(), "random store " + std::to_string(i));
  for (const auto& name : scenario_names()) round_trip(load_scenario(name).db, name);

  c.notes << pairs << " pairs (" << nonempty << " non-empty), " << means << " averages (worst rel err " << worst
          << "), " << trips << " snapshot round trips";
  return c;
}

Check ac8_performance() {
  Check c;
  const auto start = Clock::now();
  for (const char* name : {"intranet", "social"}) {
    BenchConfig cfg;
    cfg.scenario = name;
    cfg.trials = 1000;
    cfg.warmup = 20;
    cfg.concurrency = 10;
    cfg.requests = 500;
    cfg.throughput_repeats = 15;
    BenchReport r = run_bench(cfg);
    c.notes << name << ":";
    for (const auto& e : r.endpoints) {
      c.notes << " " << e.api << " " << std::round(e.overhead * 1000) / 10 << "%";
      c.expect(e.overhead <= 0.05, std::string(name) + " " + e.api + " median overhead " +
                                       std::to_string(e.overhead * 100) + "%");
    }
    c.notes << "; throughput " << std::round(r.throughput->enforced_rps) << " vs "
            << std::round(r.throughput->baseline_rps) << " req/s, degradation "
            << std::round(r.throughput->degradation * 1000) / 10 << "%; ";
    c.expect(r.throughput->degradation <= 0.05,
             std::string(name) + " throughput degradation " + std::to_string(r.throughput->degradation * 100) + "%");
  }
  const double t = seconds_since(start);
  c.notes << "runtime " << std::round(t) << " s";
  c.expect(t < 300.0, "runtime over 5 minutes");
  return c;
}

Check ac9_policy_complexity() {
  Check c;
  BenchConfig cfg;
  cfg.scenario = "wide";
  cfg.trials = 300;
  cfg.warmup = 20;
  auto series = run_wide_sweep(cfg);
  double at10 = 0, at100 = 0;
  c.notes << "added overhead by columns:";
  for (const auto& w : series) {
    c.notes << " " << w.columns << "=" << std::round(w.added.median * 10) / 10 << "us";
    if (w.columns == 10) at10 = w.added.median;
    if (w.columns == 100) at100 = w.added.median;
  }
  c.notes << "; ratio 100/10 = " << (at10 > 0 ? at100 / at10 : 0);
  c.expect(at10 > 0 && at100 > 0, "missing series points");
  c.expect(at100 <= 2 * at10, "overhead at 100 columns is more than twice that at 10");
  return c;
}

Check ac10_mutation_sensitivity() {
  Check c;
  std::size_t dropped = 0;
  for (const char* name : {"intranet", "intranet-dept", "social"}) {
    Scenario s = load_scenario(name);
    const auto requests = sample_requests(s, 50, 2026);
    c.expect(equivalence_report(s, requests).ok(), std::string(name) + ": unmutated registry is not equivalent");
    for (const auto& p : s.registry.policies()) {
      PolicyRegistry mutated = without_policy(s.registry, p.registration_index);
      const auto report = equivalence_report(s, requests, &mutated);
      c.expect(!report.mismatches.empty(), std::string(name) + ": dropping '" + p.name + "' went unnoticed");
      ++dropped;
    }
  }
  c.notes << dropped << " single-policy drops, each detected";
  return c;
}

}  // namespace
}  // namespace ctxpol

int main(int argc, char** argv) {
  using ctxpol::Check;
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
      {"oracle equivalence", ctxpol::ac1_oracle_equivalence},
      {"worked examples", ctxpol::ac2_worked_examples},
      {"default deny", ctxpol::ac3_default_deny},
      {"implicit-leak selection", ctxpol::ac4_implicit_leak},
      {"override exclusivity", ctxpol::ac5_override_exclusivity},
      {"single-query property", ctxpol::ac6_single_query},
      {"relstore correctness", ctxpol::ac7_relstore},
      {"performance", ctxpol::ac8_performance},
      {"policy-complexity flatness", ctxpol::ac9_policy_complexity},
      {"mutation sensitivity", ctxpol::ac10_mutation_sensitivity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Check result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result.expect(false, std::string("exception: ") + e.what());
    }
    if (!result.ok()) ++failed;
    std::cout << "AC" << id << " " << (result.ok() ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << result.detail() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
