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

// Inline-check handlers. Each one reads the store directly and applies the
// access rules in the handler body, the way an application without a policy
// layer would. They are written against the rules, not against the registry.

#include <algorithm>
#include <charconv>
#include <set>

#include "ctxpol/errors.hpp"
#include "fixtures_internal.hpp"

namespace ctxpol::detail {

namespace {

using ojson = nlohmann::ordered_json;

std::vector<Value> column(const Database& db, const Query& q, const std::string& name) {
  std::vector<Value> out;
  ResultSet rs = db.execute(q.values({name}));
  for (const auto& r : rs.rows()) out.push_back(r[0]);
  return out;
}

std::vector<Value> friend_ids(const Database& db, std::int64_t uid) {
  return column(db, Query::all("Friends").filter("uid", Value(uid)), "fid");
}

bool is_hr(const UserContext& u) {
  const Value& d = u.attribute("dept");
  return d.kind() == ValueKind::Text && d.as_text() == "HR";
}

// Address rule shared by the user listings.
void coarsen_addresses(ResultSet& rs, const UserContext& u, const Database& db, bool friends_rule) {
  std::set<std::int64_t> friends;
  if (friends_rule) {
    for (const auto& v : friend_ids(db, u.id)) friends.insert(v.as_int());
  }
  const Value& dept = u.attribute("dept");
  const bool transport = dept.kind() == ValueKind::Text && dept.as_text() == "Transportation";
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const std::int64_t id = rs.get(i, "id").as_int();
    if (id == u.id) continue;
    std::string addr = rs.get(i, "address").as_text();
    const bool near = friends_rule ? friends.count(id) > 0 : transport;
    rs.set(i, "address", near ? neighborhood_of(addr) : city_of(addr));
  }
}

std::int64_t int_param(const Params& p, const char* name) {
  const std::string& text = p.at(name);
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw RequestError("parameter '" + std::string(name) + "' must be an integer");
  }
  return v;
}

}  // namespace

std::map<std::string, BaselineHandler> intranet_baseline(bool friends_rule) {
  std::map<std::string, BaselineHandler> h;

  h["friend_ages"] = [](const Params&, const UserContext& u, const Database& db) {
    auto ids = friend_ids(db, u.id);
    Query q = Query::all("User").values({"id", "age"}).filter("id__in", Predicate::ValueList(ids));
    return db.execute(q).to_json();
  };

  h["list_users"] = [friends_rule](const Params&, const UserContext& u, const Database& db) {
    if (!u.authenticated) return ojson::array();
    Query q = Query::all("User");
    if (!is_hr(u)) q = q.filter("id", Value(u.id));
    ResultSet rs = db.execute(q);
    coarsen_addresses(rs, u, db, friends_rule);
    return rs.to_json();
  };

  h["avg_salary"] = [](const Params&, const UserContext& u, const Database& db) -> ojson {
    if (!u.authenticated) return nullptr;
    auto managers = column(db, Query::all("Payroll"), "mgid");
    Query q = Query::all("Payroll");
    if (std::find(managers.begin(), managers.end(), Value(u.id)) == managers.end()) {
      q = q.exclude("id__in", Predicate::ValueList(managers));
    }
    return db.execute(q.aggregate(Transform::Avg, "salary")).to_json();
  };

  h["list_addresses"] = [friends_rule](const Params&, const UserContext& u, const Database& db) {
    if (!u.authenticated) return ojson::array();
    ResultSet rs = db.execute(Query::all("User").values({"id", "name", "address"}));
    coarsen_addresses(rs, u, db, friends_rule);
    return rs.to_json();
  };

  h["get_events"] = [](const Params&, const UserContext& u, const Database& db) {
    auto mine = column(db, Query::all("Invitee").filter("empid", Value(u.id)), "eid");
    return db.execute(Query::all("EventCalendar").filter("eid__in", Predicate::ValueList(mine)))
        .to_json();
  };

  h["delete_events"] = [](const Params&, const UserContext& u, const Database& db) {
    return db.execute(Query::all("EventCalendar").filter("orgid", Value(u.id))).to_json();
  };

  h["get_location_events"] = [](const Params& p, const UserContext& u, const Database& db) {
    if (!u.authenticated) return ojson::array();
    ResultSet rs = db.execute(Query::all("EventCalendar").filter("location", Value(p.at("loc"))));
    for (std::size_t i = 0; i < rs.size(); ++i) {
      Query invited =
          Query::all("Invitee").filter("eid", rs.get(i, "eid")).filter("empid", Value(u.id));
      if (!db.exists(invited)) {
        rs.set(i, "event", Value("Private event"));
        rs.set(i, "orgid", Value(0));
      }
    }
    return rs.to_json();
  };
  return h;
}

std::map<std::string, BaselineHandler> social_baseline() {
  std::map<std::string, BaselineHandler> h;

  h["posts_view"] = [](const Params&, const UserContext& u, const Database& db) {
    if (!u.authenticated) return ojson::array();
    auto f_ids = column(db, Query::all("Follow").filter("uid", Value(u.id)), "fid");
    return db.execute(Query::all("Post").filter("user__in", Predicate::ValueList(f_ids))).to_json();
  };

  h["profile_view"] = [](const Params& p, const UserContext& u, const Database& db) {
    const std::int64_t uid = int_param(p, "uid");
    ojson body = ojson::object();
    if (!u.authenticated) {
      body["profile"] = ojson::array();
      body["posts"] = ojson::array({"Follow user to see the posts"});
      return body;
    }
    body["profile"] = db.execute(Query::all("User").filter("id", Value(uid))).to_json();
    auto f_ids = column(db, Query::all("Follow").filter("uid", Value(u.id)), "fid");
    ResultSet posts = db.execute(
        Query::all("Post").filter("user", Value(uid)).filter("user__in", Predicate::ValueList(f_ids)));
    if (posts.empty()) {
      body["posts"] = ojson::array({"Follow user to see the posts"});
    } else {
      body["posts"] = posts.to_json();
    }
    return body;
  };
  return h;
}

std::map<std::string, BaselineHandler> wide_baseline(std::size_t columns) {
  std::map<std::string, BaselineHandler> h;
  h["wide_rows"] = [columns](const Params&, const UserContext&, const Database& db) {
    return db.execute(wide_inline_query(columns)).to_json();
  };
  return h;
}

}  // namespace ctxpol::detail
