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

#include <thread>

#include "httplib.h"

#include "ctxpol/errors.hpp"
#include "ctxpol/fixtures.hpp"

namespace ctxpol {
namespace {

using ojson = nlohmann::ordered_json;

Scenario small(const std::string& name) {
  ScenarioOptions o;
  o.fixture = FixtureKind::Small;
  return load_scenario(name, o);
}

Service enforced(const Scenario& s, bool debug = false) {
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

TEST(Router, MatchesTemplates) {
  Router r;
  r.add(Route{"GET", "/events", ApiId("get_events")});
  r.add(Route{"GET", "/events/location/{loc}", ApiId("get_location_events")});
  auto m = r.match("GET", "/events/location/A");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->route->api.name(), "get_location_events");
  EXPECT_EQ(m->params.at("loc"), "A");
  EXPECT_EQ(r.match("GET", "/events")->route->api.name(), "get_events");
  EXPECT_FALSE(r.match("POST", "/events"));
  EXPECT_FALSE(r.match("GET", "/events/location"));
  EXPECT_FALSE(r.match("GET", "/events/location/A/B"));
  EXPECT_FALSE(r.match("GET", "/nothing"));
}

TEST(Router, RejectsDuplicates) {
  Router r;
  r.add(Route{"GET", "/a", ApiId("a")});
  EXPECT_THROW(r.add(Route{"GET", "/b", ApiId("a")}), BuildError);
  EXPECT_THROW(r.add(Route{"GET", "/a", ApiId("b")}), BuildError);
}

TEST(Service, MissingBackendIsBuildError) {
  Scenario s = small("intranet");
  EXPECT_THROW(Service(s.db, router_for(s.endpoints), {}), BuildError);
}

TEST(Service, BuildContext) {
  Scenario s = small("intranet");
  Service svc = enforced(s);
  ApiId api("list_users");

  RequestContext c = svc.build_context(get("/users", "2"), api);
  EXPECT_TRUE(c.user.authenticated);
  EXPECT_EQ(c.user.id, 2);
  EXPECT_EQ(c.user.attribute("dept"), Value("Transportation"));
  EXPECT_EQ(c.user.attribute("name"), Value("Bo"));
  EXPECT_EQ(c.api.name(), "list_users");

  for (std::optional<std::string> h : {std::optional<std::string>{}, std::optional<std::string>{"9999"},
                                       std::optional<std::string>{"abc"}, std::optional<std::string>{"0"},
                                       std::optional<std::string>{"-1"}, std::optional<std::string>{"2x"}}) {
    RequestContext a = svc.build_context(get("/users", h), api);
    EXPECT_FALSE(a.user.authenticated) << h.value_or("<none>");
    EXPECT_TRUE(a.user.attributes.empty());
  }
}

TEST(Service, CalendarExamples) {
  Scenario s = small("intranet");
  Service svc = enforced(s);

  Response events = svc.dispatch(get("/events", "1"));
  ASSERT_EQ(events.status, 200);
  ASSERT_EQ(events.body.size(), 1u);
  EXPECT_EQ(events.body[0]["eid"], 1);

  Response del = svc.dispatch(get("/events/deletable", "2"));
  ASSERT_EQ(del.body.size(), 1u);
  EXPECT_EQ(del.body[0]["eid"], 2);

  Response loc = svc.dispatch(get("/events/location/A", "1"));
  ASSERT_EQ(loc.body.size(), 2u);
  EXPECT_EQ(loc.body[0]["event"], "Standup");
  EXPECT_EQ(loc.body[0]["orgid"], 1);
  EXPECT_EQ(loc.body[1]["event"], "Private event");
  EXPECT_EQ(loc.body[1]["orgid"], 0);
  EXPECT_EQ(loc.body[1]["date"], "2026-03-03");
}

TEST(Service, AddressAndSalaryExamples) {
  Scenario s = small("intranet");
  Service svc = enforced(s);

  // Friends: 1->2, so Ann sees Bo's neighborhood, everyone else's city.
  Response addrs = svc.dispatch(get("/addresses", "1"));
  ASSERT_EQ(addrs.body.size(), 4u);
  EXPECT_EQ(addrs.body[0]["address"], "1 Elm St, Northside, Springfield");
  EXPECT_EQ(addrs.body[1]["address"], "Riverside, Springfield");
  EXPECT_EQ(addrs.body[2]["address"], "Shelbyville");

  // Non-HR users see their own row only.
  Response users = svc.dispatch(get("/users", "3"));
  ASSERT_EQ(users.body.size(), 1u);
  EXPECT_EQ(users.body[0]["name"], "Cy");

  // Cy is a manager and averages every salary. Bo is not and sees the
  // average without managers.
  EXPECT_DOUBLE_EQ(svc.dispatch(get("/payroll/average", "3")).body.get<double>(), 100.0);
  EXPECT_DOUBLE_EQ(svc.dispatch(get("/payroll/average", "2")).body.get<double>(), 80.0);
  EXPECT_TRUE(svc.dispatch(get("/payroll/average")).body.is_null());
}

TEST(Service, FriendAgesOverridesGenericPolicy) {
  Scenario s = small("intranet");
  Response r = enforced(s).dispatch(get("/ages", "1"));
  ASSERT_EQ(r.body.size(), 1u);
  EXPECT_EQ(r.body[0]["id"], 2);
  EXPECT_EQ(r.body[0]["age"], 29);
}

TEST(Service, SocialExamples) {
  Scenario s = small("social");
  Service svc = enforced(s);
  Response profile = svc.dispatch(get("/profile/3", "1"));
  ASSERT_EQ(profile.status, 200);
  EXPECT_EQ(profile.body["posts"], ojson::array({"Follow user to see the posts"}));
  Response followed = svc.dispatch(get("/profile/2", "1"));
  ASSERT_TRUE(followed.body["posts"].is_array());
  ASSERT_FALSE(followed.body["posts"].empty());
  EXPECT_TRUE(followed.body["posts"][0].is_object());
  EXPECT_EQ(svc.dispatch(get("/posts")).body, ojson::array());
}

TEST(Service, StatusCodes) {
  Scenario s = small("social");
  Service svc = enforced(s);
  Response health = svc.dispatch(get("/healthz"));
  EXPECT_EQ(health.status, 200);
  EXPECT_EQ(health.body["status"], "ok");

  Response missing = svc.dispatch(get("/nope", "1"));
  EXPECT_EQ(missing.status, 404);
  EXPECT_EQ(missing.body["code"], "not_found");

  Response bad = svc.dispatch(get("/profile/abc", "1"));
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body["code"], "bad_request");
}

TEST(Service, PolicyFaultIs500) {
  Scenario s = small("social");
  PolicyRegistry reg;
  reg.add_pre("broken", {"Post.*"},
              [](const Query&, const RequestContext&, const PrivilegedAccessor&) -> Query {
                throw std::runtime_error("boom");
              });
  reg.seal();
  Service svc(s.db, router_for(s.endpoints), enforced_backends(s.endpoints, reg, s.db));
  Response r = svc.dispatch(get("/posts", "1"));
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(r.body["code"], "policy_fault");
  EXPECT_NE(r.body["message"].get<std::string>().find("broken"), std::string::npos);
}

TEST(Service, FieldScopeIs500InDebug) {
  Scenario s = small("social");
  PolicyRegistry reg;
  reg.add_pre("all-posts", {"Post.*"},
              [](const Query& q, const RequestContext&, const PrivilegedAccessor&) { return q; });
  reg.add_post("reattribute", {"Post.msg"}, [](ResultSet rs, const RequestContext&, const PrivilegedAccessor&) {
    for (std::size_t i = 0; i < rs.size(); ++i) rs.set(i, "user", Value(0));
    return rs;
  });
  reg.seal();
  ServiceOptions debug;
  debug.debug_trace = true;
  Service svc(s.db, router_for(s.endpoints), enforced_backends(s.endpoints, reg, s.db), debug);
  Response r = svc.dispatch(get("/posts", "1"));
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(r.body["code"], "field_scope");
  Service plain(s.db, router_for(s.endpoints), enforced_backends(s.endpoints, reg, s.db));
  EXPECT_EQ(plain.dispatch(get("/posts", "1")).status, 200);
}

TEST(Service, TraceHeaderOnlyInDebug) {
  Scenario s = small("intranet");
  EXPECT_FALSE(enforced(s).dispatch(get("/events", "1")).trace_header);
  Response r = enforced(s, true).dispatch(get("/events/location/A", "1"));
  ASSERT_TRUE(r.trace_header);
  ojson trace = ojson::parse(*r.trace_header);
  ASSERT_EQ(trace.size(), 1u);
  EXPECT_EQ(trace[0]["api"], "get_location_events");
  EXPECT_EQ(trace[0]["user"], 1);
  EXPECT_EQ(trace[0]["pre"]["selection"], "api-specific");
  EXPECT_EQ(trace[0]["post"]["policies"][0]["name"], "events-location-mask");
  EXPECT_EQ(trace[0]["store_executions"], 1);
}

// Every store execution during a request is either the one enforced query or
// a privileged call made by a policy body; handlers never reach the store.
TEST(ServiceProperties, CompleteMediation) {
  for (const char* name : {"intranet", "intranet-dept", "social"}) {
    Scenario s = load_scenario(name);
    Service svc = enforced(s, true);
    for (const auto& req : sample_requests(s, 30, 11)) {
      const std::uint64_t before = s.db.execution_count();
      Response r = svc.dispatch(req);
      ASSERT_EQ(r.status, 200) << req.path;
      const std::uint64_t delta = s.db.execution_count() - before;
      std::uint64_t accounted = 0;
      for (const auto& t : ojson::parse(*r.trace_header)) {
        EXPECT_EQ(t["store_executions"], 1);
        accounted += t["store_executions"].get<std::uint64_t>() + t["privileged_calls"].get<std::uint64_t>();
      }
      EXPECT_EQ(delta, accounted) << name << " " << req.path;
    }
  }
}

TEST(ServiceProperties, AnonymousSeesNothing) {
  for (const char* name : {"intranet", "social"}) {
    Scenario s = load_scenario(name);
    Service svc = enforced(s);
    for (const auto& req : sample_requests(s, 0, 1)) {
      Response r = svc.dispatch(req);
      ASSERT_EQ(r.status, 200);
      if (r.body.is_object()) {
        EXPECT_EQ(r.body["profile"], ojson::array());
        EXPECT_EQ(r.body["posts"], ojson::array({"Follow user to see the posts"}));
      } else {
        EXPECT_TRUE(r.body.is_null() || r.body == ojson::array()) << req.path << r.body_text();
      }
    }
  }
}

TEST(Http, ServesOverLoopback) {
  Scenario s = small("intranet");
  Service svc = enforced(s, true);
  HttpServer server(svc);
  ASSERT_TRUE(server.bind("127.0.0.1", 0));
  ASSERT_GT(server.port(), 0);
  std::thread t([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", server.port());
  auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto events = client.Get("/events", httplib::Headers{{"X-User-Id", "1"}});
  ASSERT_TRUE(events);
  EXPECT_EQ(events->status, 200);
  EXPECT_EQ(events->body, svc.dispatch(get("/events", "1")).body_text());
  EXPECT_TRUE(events->has_header("X-Policy-Trace"));
  EXPECT_EQ(events->get_header_value("Content-Type"), "application/json");

  auto missing = client.Get("/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  HttpServer second(svc);
  EXPECT_FALSE(second.bind("127.0.0.1", server.port()));

  server.stop();
  t.join();
}

}  // namespace
}  // namespace ctxpol
