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
#include <cmath>
#include <random>
#include <set>

#include "ctxpol/errors.hpp"
#include "ctxpol/fixtures.hpp"
#include "fixtures_internal.hpp"

namespace ctxpol {

namespace {

constexpr std::size_t kWideWidth = 101;  // id plus c1..c100

// ---------------------------------------------------------------------------
// Schemas

void intranet_schema(Database& db) {
  db.create_table({"User",
                   {{"id", ValueKind::Int},
                    {"name", ValueKind::Text},
                    {"age", ValueKind::Int},
                    {"address", ValueKind::Text},
                    {"dept", ValueKind::Text}},
                   "id"});
  db.create_table(
      {"Payroll", {{"id", ValueKind::Int}, {"mgid", ValueKind::Int}, {"salary", ValueKind::Float}}, "id"});
  db.create_table({"EventCalendar",
                   {{"eid", ValueKind::Int},
                    {"date", ValueKind::Text},
                    {"location", ValueKind::Text},
                    {"orgid", ValueKind::Int},
                    {"event", ValueKind::Text}},
                   "eid"});
  db.create_table({"Invitee", {{"eid", ValueKind::Int}, {"empid", ValueKind::Int}}, std::nullopt});
  db.create_table(
      {"Friends", {{"id", ValueKind::Int}, {"uid", ValueKind::Int}, {"fid", ValueKind::Int}}, "id"});
}

void social_schema(Database& db) {
  db.create_table({"User", {{"id", ValueKind::Int}, {"name", ValueKind::Text}}, "id"});
  db.create_table(
      {"Follow", {{"id", ValueKind::Int}, {"uid", ValueKind::Int}, {"fid", ValueKind::Int}}, "id"});
  db.create_table(
      {"Post", {{"id", ValueKind::Int}, {"user", ValueKind::Int}, {"msg", ValueKind::Text}}, "id"});
}

void wide_schema(Database& db) {
  for (const char* name : {"WideA", "WideB"}) {
    std::vector<ColumnSchema> cols{{"id", ValueKind::Int}};
    for (std::size_t i = 1; i < kWideWidth; ++i) cols.push_back({wide_column(i), ValueKind::Int});
    db.create_table({name, std::move(cols), "id"});
  }
}

// ---------------------------------------------------------------------------
// Seeding

class Seeder {
 public:
  explicit Seeder(std::uint64_t seed) : rng_(seed) {}
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  template <typename T, std::size_t N>
  const T& pick(const T (&items)[N]) {
    return items[pick(N)];
  }
  /// `k` distinct values from 1..n, excluding `skip`.
  std::vector<std::int64_t> distinct(std::size_t n, std::size_t k, std::int64_t skip) {
    std::set<std::int64_t> chosen;
    const std::size_t available = n - (skip >= 1 && static_cast<std::size_t>(skip) <= n ? 1 : 0);
    k = std::min(k, available);
    while (chosen.size() < k) {
      auto v = static_cast<std::int64_t>(1 + pick(n));
      if (v != skip) chosen.insert(v);
    }
    return {chosen.begin(), chosen.end()};
  }

 private:
  std::mt19937_64 rng_;
};

const char* kFirst[] = {"Ada", "Ben", "Cleo", "Dev", "Eli", "Fay", "Gus", "Hana", "Ivo", "Jun",
                        "Kai", "Lea", "Mo", "Nia", "Oto", "Pia", "Quin", "Rui", "Sol", "Tam"};
const char* kLast[] = {"Abe", "Brook", "Cruz", "Dahl", "Ekker", "Fox", "Grant", "Holm",
                       "Ito", "Jansen", "Kerr", "Lund", "Moss", "Noor", "Ortiz", "Park"};
const char* kStreets[] = {"Elm St", "Oak Ave", "Pine Rd", "Ash Ln", "Birch Way", "Cedar Ct",
                          "Maple Dr", "Willow Pl"};
const char* kHoods[] = {"Northside", "Riverside", "Hilltop", "Old Town", "Harbor", "Westend"};
const char* kCities[] = {"Springfield", "Shelbyville", "Ogdenville", "Brockway"};
const char* kDepts[] = {"HR", "Eng", "Transportation", "Sales", "Finance"};
const char* kEvents[] = {"Standup", "Budget", "Review", "Offsite", "Hiring", "Retro", "Demo"};

void seed_intranet(Database& db, const SeedSizes& n, std::uint64_t seed) {
  Seeder s(seed);
  for (std::size_t id = 1; id <= n.users; ++id) {
    std::string name = std::string(s.pick(kFirst)) + " " + s.pick(kLast);
    std::string address = std::to_string(1 + s.pick(200)) + " " + s.pick(kStreets) + ", " +
                          s.pick(kHoods) + ", " + s.pick(kCities);
    db.insert("User", {static_cast<std::int64_t>(id), name, static_cast<std::int64_t>(22 + s.pick(43)),
                       address, s.pick(kDepts)});
  }
  std::int64_t fid = 1;
  for (std::size_t id = 1; id <= n.users; ++id) {
    auto self = static_cast<std::int64_t>(id);
    for (auto other : s.distinct(n.users, 5 + s.pick(3), self)) {
      db.insert("Friends", {fid++, self, other});
    }
  }
  const std::size_t managers = std::max<std::size_t>(1, n.users / 10);
  for (std::size_t id = 1; id <= n.users; ++id) {
    const bool is_manager = id <= managers;
    auto mgid = static_cast<std::int64_t>(1 + s.pick(managers));
    double salary = is_manager ? 90000.0 + static_cast<double>(s.pick(60000))
                               : 40000.0 + static_cast<double>(s.pick(50000));
    db.insert("Payroll", {static_cast<std::int64_t>(id), mgid, salary});
  }
  for (std::size_t eid = 1; eid <= n.events; ++eid) {
    auto org = static_cast<std::int64_t>(1 + s.pick(n.users));
    char date[16];
    std::snprintf(date, sizeof date, "2026-%02zu-%02zu", 1 + s.pick(12), 1 + s.pick(28));
    std::string location = "L" + std::to_string(s.pick(10));
    std::string title = std::string(s.pick(kEvents)) + " " + std::to_string(eid);
    auto e = static_cast<std::int64_t>(eid);
    db.insert("EventCalendar", {e, std::string(date), location, org, title});
    if (s.pick(4) != 0) db.insert("Invitee", {e, org});
    for (auto guest : s.distinct(n.users, 1 + s.pick(4), org)) db.insert("Invitee", {e, guest});
  }
}

void small_intranet(Database& db) {
  db.insert("User", {1, "Ann", 41, "1 Elm St, Northside, Springfield", "Eng"});
  db.insert("User", {2, "Bo", 29, "9 Oak Ave, Riverside, Springfield", "Transportation"});
  db.insert("User", {3, "Cy", 52, "4 Pine Rd, Hilltop, Shelbyville", "Eng"});
  db.insert("User", {4, "Di", 35, "7 Ash Ln, Old Town, Shelbyville", "HR"});
  db.insert("Payroll", {1, 3, 100.0});
  db.insert("Payroll", {2, 3, 80.0});
  db.insert("Payroll", {3, 1, 120.0});
  db.insert("EventCalendar", {1, "2026-03-02", "A", 1, "Standup"});
  db.insert("EventCalendar", {2, "2026-03-03", "A", 2, "Budget"});
  db.insert("Invitee", {1, 1});
  db.insert("Invitee", {1, 2});
  db.insert("Invitee", {2, 2});
  db.insert("Friends", {1, 1, 2});
  db.insert("Friends", {2, 2, 1});
  db.insert("Friends", {3, 3, 4});
}

void seed_social(Database& db, const SeedSizes& n, std::uint64_t seed) {
  Seeder s(seed);
  for (std::size_t id = 1; id <= n.social_users; ++id) {
    db.insert("User", {static_cast<std::int64_t>(id), std::string(s.pick(kFirst)) + " " + s.pick(kLast)});
  }
  std::int64_t follow_id = 1;
  for (std::size_t id = 1; id <= n.social_users; ++id) {
    auto self = static_cast<std::int64_t>(id);
    for (auto other : s.distinct(n.social_users, s.pick(4), self)) {
      db.insert("Follow", {follow_id++, self, other});
    }
  }
  for (std::size_t pid = 1; pid <= n.posts; ++pid) {
    auto author = static_cast<std::int64_t>(1 + s.pick(n.social_users));
    db.insert("Post", {static_cast<std::int64_t>(pid), author,
                       "post " + std::to_string(pid) + " by user " + std::to_string(author)});
  }
}

void small_social(Database& db) {
  for (std::int64_t id = 1; id <= 5; ++id) db.insert("User", {id, std::string(kFirst[id])});
  db.insert("Follow", {1, 1, 2});
  db.insert("Follow", {2, 1, 5});
  db.insert("Follow", {3, 3, 1});
  db.insert("Post", {1, 2, "hello from 2"});
  db.insert("Post", {2, 3, "hello from 3"});
  db.insert("Post", {3, 5, "hello from 5"});
  db.insert("Post", {4, 2, "again from 2"});
  db.insert("Post", {5, 4, "hello from 4"});
}

void seed_wide(Database& db, std::size_t rows, std::uint64_t seed) {
  Seeder s(seed);
  for (const char* name : {"WideA", "WideB"}) {
    for (std::size_t id = 1; id <= rows; ++id) {
      Row r;
      r.reserve(kWideWidth);
      r.emplace_back(static_cast<std::int64_t>(id));
      for (std::size_t i = 1; i < kWideWidth; ++i) r.emplace_back(static_cast<std::int64_t>(s.pick(1000)));
      db.insert(name, std::move(r));
    }
  }
}

// ---------------------------------------------------------------------------
// Policies

Query unless_anonymous(const Query& q, const RequestContext& c) {
  return c.user.authenticated ? q : q.none();
}

std::optional<std::size_t> id_column(const ResultSet& rs) { return rs.column_index("id"); }

enum class AddressRule { Friends, Department };

void add_intranet_policies(PolicyRegistry& r, AddressRule rule) {
  r.add_pre("user-name-gate", {"User.name"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              return unless_anonymous(q, c);
            });
  r.add_pre("user-name-age", {"User.name", "User.age"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              const Value& dept = c.user.attribute("dept");
              if (dept.kind() != ValueKind::Text || dept.as_text() != "HR") return q.filter("id", Value(c.user.id));
              return q;
            });
  r.add_pre("friend-ages", {"User.age"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              return q.filter("id__in",
                              Query::all("Friends").filter("uid", Value(c.user.id)).values({"fid"}));
            },
            std::vector<ApiId>{ApiId("friend_ages")});
  r.add_pre("payroll-gate", {"Payroll.salary"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              return unless_anonymous(q, c);
            });
  r.add_pre("non-manager-average", {"Avg(Payroll.salary)"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor& db) {
              auto mgr = db.column(Query::all("Payroll"), "mgid");
              if (std::find(mgr.begin(), mgr.end(), Value(c.user.id)) == mgr.end()) {
                return q.exclude("id__in", Predicate::ValueList(mgr.begin(), mgr.end()));
              }
              return q;
            });
  if (rule == AddressRule::Friends) {
    r.add_post("address-granularity", {"User.address"},
               [](ResultSet rs, const RequestContext& c, const PrivilegedAccessor& db) {
                 auto friends = db.column(Query::all("Friends").filter("uid", Value(c.user.id)), "fid");
                 std::set<Value> near(friends.begin(), friends.end());
                 auto id = id_column(rs);
                 for (std::size_t i = 0; i < rs.size(); ++i) {
                   const Value* row_id = id ? &rs.rows()[i][*id] : nullptr;
                   if (row_id && *row_id == Value(c.user.id)) continue;
                   const std::string& addr = rs.get(i, "address").as_text();
                   rs.set(i, "address",
                          row_id && near.count(*row_id) ? neighborhood_of(addr) : city_of(addr));
                 }
                 return rs;
               });
  } else {
    r.add_post("address-granularity", {"User.address"},
               [](ResultSet rs, const RequestContext& c, const PrivilegedAccessor&) {
                 auto id = id_column(rs);
                 const Value& dept = c.user.attribute("dept");
                 const bool transport = dept.kind() == ValueKind::Text && dept.as_text() == "Transportation";
                 for (std::size_t i = 0; i < rs.size(); ++i) {
                   if (id && rs.rows()[i][*id] == Value(c.user.id)) continue;
                   const std::string& addr = rs.get(i, "address").as_text();
                   if (transport) {
                     rs.set(i, "address", neighborhood_of(addr));
                   } else {
                     rs.set(i, "address", city_of(addr));
                   }
                 }
                 return rs;
               });
  }
  r.add_pre("events-invited", {"EventCalendar.*"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              return q.filter("eid__in",
                              Query::all("Invitee").filter("empid", Value(c.user.id)).values({"eid"}));
            });
  r.add_pre("events-organizer", {"EventCalendar.*"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              return q.filter("orgid", Value(c.user.id));
            },
            std::vector<ApiId>{ApiId("delete_events")});
  r.add_pre("events-location-all", {"EventCalendar.*"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              return unless_anonymous(q, c);
            },
            std::vector<ApiId>{ApiId("get_location_events")});
  r.add_post("events-location-mask", {"EventCalendar.*"},
             [](ResultSet rs, const RequestContext& c, const PrivilegedAccessor& db) {
               for (std::size_t i = 0; i < rs.size(); ++i) {
                 Query invited = Query::all("Invitee")
                                     .filter("eid", rs.get(i, "eid"))
                                     .filter("empid", Value(c.user.id));
                 if (!db.exists(invited)) {
                   rs.set(i, "event", Value("Private event"));
                   rs.set(i, "orgid", Value(0));
                 }
               }
               return rs;
             },
             std::vector<ApiId>{ApiId("get_location_events")});
}

void add_social_policies(PolicyRegistry& r) {
  r.add_pre("posts-followed", {"Post.*"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              if (!c.user.authenticated) return q.none();
              return q.filter("user__in",
                              Query::all("Follow").filter("uid", Value(c.user.id)).values({"fid"}));
            });
  r.add_post("profile-follow-hint", {"Post.*"},
             [](ResultSet rs, const RequestContext&, const PrivilegedAccessor&) {
               if (rs.empty()) return ResultSet::message("Follow user to see the posts");
               return rs;
             },
             std::vector<ApiId>{ApiId("profile_view")});
  r.add_pre("profiles-signed-in", {"User.*"},
            [](const Query& q, const RequestContext& c, const PrivilegedAccessor&) {
              return unless_anonymous(q, c);
            });
}

std::vector<Endpoint> wide_endpoints() {
  std::vector<Endpoint> out;
  out.push_back(Endpoint{Route{"GET", "/wide", ApiId("wide_rows")},
                         [](const Params&, DataAccess& data) { return data.fetch(wide_query()).to_json(); }});
  return out;
}

}  // namespace

std::string wide_column(std::size_t i) { return "c" + std::to_string(i); }

Query wide_query() { return Query::all("WideA").filter("id__lte", Value(1000)); }

Query wide_inline_query(std::size_t columns) {
  Query q = wide_query();
  for (std::size_t i = 1; i <= columns; ++i) q = q.filter(wide_column(i) + "__gte", Value(0));
  return q;
}

PolicyRegistry wide_registry(std::size_t columns) {
  if (columns == 0 || columns >= kWideWidth) {
    throw Error("wide policy needs between 1 and " + std::to_string(kWideWidth - 1) + " columns");
  }
  std::vector<SelectorEntry> entries;
  for (std::size_t i = 1; i <= columns; ++i) {
    entries.push_back(SelectorEntry::column(FieldUse{{"WideA", wide_column(i)}, Transform::None}));
  }
  PolicyRegistry r;
  r.add_pre("wide-columns", Selector(std::move(entries)),
            [columns](const Query& q, const RequestContext&, const PrivilegedAccessor&) {
              Query out = q;
              for (std::size_t i = 1; i <= columns; ++i) out = out.filter(wide_column(i) + "__gte", Value(0));
              return out;
            });
  r.seal();
  return r;
}

std::string neighborhood_of(std::string_view address) {
  auto comma = address.find(',');
  if (comma == std::string_view::npos) return std::string(address);
  auto rest = address.substr(comma + 1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  return std::string(rest);
}

std::string city_of(std::string_view address) {
  auto comma = address.rfind(',');
  if (comma == std::string_view::npos) return std::string(address);
  auto rest = address.substr(comma + 1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  return std::string(rest);
}

std::vector<std::string> scenario_names() { return {"intranet", "intranet-dept", "social", "wide"}; }

SeedSizes seed_sizes(double scale) {
  auto scaled = [scale](double base) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(base * scale)));
  };
  return SeedSizes{scaled(200), scaled(1000), scaled(100), scaled(2000), scaled(10000)};
}

PolicyRegistry without_policy(const PolicyRegistry& registry, std::size_t index) {
  PolicyRegistry out;
  for (const auto& p : registry.policies()) {
    if (p.registration_index != index) out.add(p);
  }
  out.seal();
  return out;
}

Scenario load_scenario(const std::string& name, const ScenarioOptions& options) {
  if (!(options.scale > 0)) throw Error("scale must be positive");
  const SeedSizes sizes = seed_sizes(options.scale);
  Scenario s;
  s.name = name;
  if (name == "intranet" || name == "intranet-dept") {
    intranet_schema(s.db);
    if (options.fixture == FixtureKind::Small) small_intranet(s.db);
    if (options.fixture == FixtureKind::Seeded) seed_intranet(s.db, sizes, options.seed);
    add_intranet_policies(s.registry,
                          name == "intranet" ? AddressRule::Friends : AddressRule::Department);
    s.registry.seal();
    s.endpoints = intranet_endpoints();
    s.baseline = detail::intranet_baseline(name == "intranet");
  } else if (name == "social") {
    social_schema(s.db);
    if (options.fixture == FixtureKind::Small) small_social(s.db);
    if (options.fixture == FixtureKind::Seeded) seed_social(s.db, sizes, options.seed);
    add_social_policies(s.registry);
    s.registry.seal();
    s.endpoints = social_endpoints();
    s.baseline = detail::social_baseline();
  } else if (name == "wide") {
    wide_schema(s.db);
    if (options.fixture != FixtureKind::Empty) {
      seed_wide(s.db, options.fixture == FixtureKind::Small ? 50 : sizes.wide_rows, options.seed);
    }
    s.registry = wide_registry(std::min(options.wide_columns, kWideWidth - 1));
    s.endpoints = wide_endpoints();
    s.baseline = detail::wide_baseline(std::min(options.wide_columns, kWideWidth - 1));
  } else {
    throw Error("unknown scenario '" + name + "'");
  }
  return s;
}

}  // namespace ctxpol
