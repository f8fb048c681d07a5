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

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "ctxpol/errors.hpp"
#include "ctxpol/fixtures.hpp"

namespace ctxpol {
namespace {

using ojson = nlohmann::ordered_json;

ScenarioOptions small() {
  ScenarioOptions o;
  o.fixture = FixtureKind::Small;
  return o;
}

UserContext signed_in(const Database& db, std::int64_t id) { return resolve_user(db, std::to_string(id)); }

std::map<std::int64_t, std::size_t> out_degree(const Database& db, const std::string& table) {
  std::map<std::int64_t, std::size_t> deg;
  db.for_each_row(table, [&](const Row& r) { ++deg[r[1].as_int()]; });
  return deg;
}

TEST(Fixtures, UnknownScenario) {
  EXPECT_THROW(load_scenario("conference"), Error);
  ScenarioOptions bad;
  bad.scale = 0;
  EXPECT_THROW(load_scenario("intranet", bad), Error);
}

TEST(Fixtures, IntranetSeedSizes) {
  Scenario s = load_scenario("intranet");
  EXPECT_EQ(s.db.row_count("User"), 200u);
  EXPECT_EQ(s.db.row_count("Payroll"), 200u);
  EXPECT_EQ(s.db.row_count("EventCalendar"), 1000u);
  auto deg = out_degree(s.db, "Friends");
  EXPECT_EQ(deg.size(), 200u);
  for (const auto& [uid, n] : deg) EXPECT_GE(n, 5u) << uid;
}

TEST(Fixtures, SocialSeedSizes) {
  Scenario s = load_scenario("social");
  EXPECT_EQ(s.db.row_count("User"), 100u);
  EXPECT_EQ(s.db.row_count("Post"), 2000u);
  auto deg = out_degree(s.db, "Follow");
  for (const auto& [uid, n] : deg) EXPECT_LE(n, 3u) << uid;
  std::size_t silent = 100 - deg.size();
  EXPECT_GT(silent, 0u);
}

TEST(Fixtures, WideSeedSizes) {
  ScenarioOptions o;
  o.wide_columns = 10;
  Scenario s = load_scenario("wide", o);
  EXPECT_EQ(s.db.row_count("WideA"), 10000u);
  EXPECT_EQ(s.db.row_count("WideB"), 10000u);
  EXPECT_EQ(s.db.catalog().at("WideA").columns.size(), 101u);
  EXPECT_EQ(s.registry.policies().at(0).selector.entries().size(), 10u);
  EXPECT_THROW(wide_registry(0), Error);
  EXPECT_THROW(wide_registry(101), Error);
}

TEST(Fixtures, ScaleIsLinear) {
  SeedSizes s = seed_sizes(100.0);
  EXPECT_EQ(s.users, 20000u);
  EXPECT_EQ(s.events, 100000u);
  EXPECT_EQ(s.social_users, 10000u);
  EXPECT_EQ(seed_sizes(0.5).users, 100u);
}

TEST(Fixtures, SeedingIsDeterministic) {
  for (const char* name : {"intranet", "social"}) {
    ScenarioOptions o;
    EXPECT_EQ(snapshot_text(load_scenario(name, o).db), snapshot_text(load_scenario(name, o).db));
    ScenarioOptions other;
    other.seed = 8;
    EXPECT_NE(snapshot_checksum(load_scenario(name, o).db),
              snapshot_checksum(load_scenario(name, other).db));
  }
}

TEST(Fixtures, AddressGranularity) {
  EXPECT_EQ(neighborhood_of("12 Elm St, Northside, Springfield"), "Northside, Springfield");
  EXPECT_EQ(city_of("12 Elm St, Northside, Springfield"), "Springfield");
  EXPECT_EQ(city_of("Springfield"), "Springfield");
}

TEST(Fixtures, WithoutPolicyReindexes) {
  Scenario s = load_scenario("social", small());
  PolicyRegistry r = without_policy(s.registry, 0);
  ASSERT_EQ(r.size(), s.registry.size() - 1);
  EXPECT_TRUE(r.sealed());
  EXPECT_EQ(r.policies()[0].registration_index, 0u);
  EXPECT_EQ(r.policies()[0].name, s.registry.policies()[1].name);
}

// Baseline handler examples on the small social fixture: user 1 follows 2 and 5.
TEST(Baseline, SocialExamples) {
  Scenario s = load_scenario("social", small());
  UserContext u1 = signed_in(s.db, 1);
  ojson posts = s.baseline.at("posts_view")({}, u1, s.db);
  std::set<std::int64_t> authors;
  for (const auto& p : posts) authors.insert(p["user"].get<std::int64_t>());
  EXPECT_EQ(authors, (std::set<std::int64_t>{2, 5}));
  EXPECT_EQ(posts.size(), 3u);

  ojson profile = s.baseline.at("profile_view")({{"uid", "3"}}, u1, s.db);
  EXPECT_EQ(profile["profile"].size(), 1u);
  EXPECT_EQ(profile["posts"], ojson::array({"Follow user to see the posts"}));

  EXPECT_EQ(s.baseline.at("posts_view")({}, UserContext::anonymous(), s.db), ojson::array());
}

TEST(Equivalence, SmallFixtures) {
  for (const char* name : {"intranet", "intranet-dept", "social", "wide"}) {
    Scenario s = load_scenario(name, small());
    auto report = equivalence_report(s, sample_requests(s, 50, 1));
    EXPECT_TRUE(report.ok()) << report.to_table();
    EXPECT_GT(report.requests, 0u);
  }
}

TEST(Equivalence, EmptyDatabases) {
  for (const char* name : {"intranet", "intranet-dept", "social", "wide"}) {
    ScenarioOptions o;
    o.fixture = FixtureKind::Empty;
    Scenario s = load_scenario(name, o);
    auto report = equivalence_report(s, sample_requests(s, 50, 1));
    EXPECT_TRUE(report.ok()) << report.to_table();
  }
}

TEST(Equivalence, SeededIntranetDept) {
  Scenario s = load_scenario("intranet-dept");
  auto report = equivalence_report(s, sample_requests(s, 50, 3));
  EXPECT_TRUE(report.ok()) << report.to_table();
}

TEST(Equivalence, ReportFormats) {
  Scenario s = load_scenario("intranet", small());
  PolicyRegistry broken = without_policy(s.registry, 6);
  auto report = equivalence_report(s, sample_requests(s, 50, 1), &broken);
  ASSERT_FALSE(report.ok());
  ojson j = report.to_json();
  EXPECT_EQ(j["mismatch_count"], report.mismatches.size());
  EXPECT_EQ(j["mismatches"][0]["api"], "get_events");
  EXPECT_NE(report.to_table().find("MISMATCH get_events"), std::string::npos);
}

TEST(Equivalence, SamplesCoverEveryEndpointAndAnonymous) {
  Scenario s = load_scenario("social");
  auto requests = sample_requests(s, 50, 1);
  std::set<std::string> users;
  for (const auto& r : requests) users.insert(r.user_header.value_or("anonymous"));
  EXPECT_EQ(users.size(), 51u);
  auto report = equivalence_report(s, requests);
  EXPECT_EQ(report.per_api.size(), 2u);
}

// Pre-eval bodies of the shipped fixtures only narrow: the pre-phase rows are a
// subset of the unrestricted rows. Aggregates return one computed row, so they
// are left out.
TEST(FixtureProperties, PreEvalContainment) {
  for (const char* name : {"intranet", "social"}) {
    Scenario s = load_scenario(name);
    PolicyRegistry pre_only;
    for (const auto& p : s.registry.policies()) {
      if (p.phase == PolicyPhase::Pre) pre_only.add(p);
    }
    pre_only.seal();

    struct Checking : DataAccess {
      const PolicyRegistry* registry;
      const Database* db;
      const RequestContext* ctx;
      int checked = 0;
      ResultSet fetch(const Query& q) override {
        ResultSet narrowed = enforce(*registry, *db, q, *ctx);
        ++checked;
        if (q.aggregation()) return narrowed;
        ResultSet whole = db->execute(q);
        std::multiset<Row> all(whole.rows().begin(), whole.rows().end());
        for (const auto& r : narrowed.rows()) {
          auto it = all.find(r);
          EXPECT_TRUE(it != all.end()) << to_sql(q, db->catalog());
          if (it != all.end()) all.erase(it);
        }
        return narrowed;
      }
    };
    Router router = router_for(s.endpoints);
    for (const auto& req : sample_requests(s, 50, 5)) {
      auto m = router.match(req.method, req.path);
      ASSERT_TRUE(m);
      RequestContext ctx{resolve_user(s.db, req.user_header), m->route->api};
      Checking access;
      access.registry = &pre_only;
      access.db = &s.db;
      access.ctx = &ctx;
      for (const auto& e : s.endpoints) {
        if (e.route.api == m->route->api) e.handler(m->params, access);
      }
      ASSERT_GT(access.checked, 0);
    }
  }
}

TEST(FixtureProperties, PostBodiesStayInScope) {
  for (const char* name : {"intranet", "intranet-dept", "social"}) {
    Scenario s = load_scenario(name);
    Service debug(s.db, router_for(s.endpoints), enforced_backends(s.endpoints, s.registry, s.db, true));
    for (const auto& req : sample_requests(s, 50, 9)) {
      Response r = debug.dispatch(req);
      ASSERT_EQ(r.status, 200) << req.path << " " << r.body_text();
    }
  }
}

TEST(FixtureProperties, EnforcementIsRepeatable) {
  Scenario s = load_scenario("intranet");
  Service svc(s.db, router_for(s.endpoints), enforced_backends(s.endpoints, s.registry, s.db));
  for (const auto& req : sample_requests(s, 10, 2)) {
    ASSERT_EQ(svc.dispatch(req).body_text(), svc.dispatch(req).body_text());
  }
}

}  // namespace
}  // namespace ctxpol
