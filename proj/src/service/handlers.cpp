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

// Application handlers. These carry no access checks of their own.

#include <charconv>

#include "ctxpol/service.hpp"

namespace ctxpol {

namespace {

using ojson = nlohmann::ordered_json;

Endpoint get(std::string path, std::string api, AppHandler handler) {
  return Endpoint{Route{"GET", std::move(path), ApiId(std::move(api))}, std::move(handler)};
}

AppHandler rows_of(Query q) {
  return [q = std::move(q)](const Params&, DataAccess& data) { return data.fetch(q).to_json(); };
}

std::int64_t int_param(const Params& params, std::string_view name) {
  const std::string& text = params.at(std::string(name));
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw RequestError("parameter '" + std::string(name) + "' must be an integer");
  }
  return v;
}

}  // namespace

std::vector<Endpoint> intranet_endpoints() {
  std::vector<Endpoint> out;
  out.push_back(get("/ages", "friend_ages", rows_of(Query::all("User").values({"id", "age"}))));
  out.push_back(get("/users", "list_users", rows_of(Query::all("User"))));
  out.push_back(get("/payroll/average", "avg_salary",
                    rows_of(Query::all("Payroll").aggregate(Transform::Avg, "salary"))));
  out.push_back(get("/addresses", "list_addresses",
                    rows_of(Query::all("User").values({"id", "name", "address"}))));
  out.push_back(get("/events", "get_events", rows_of(Query::all("EventCalendar"))));
  out.push_back(get("/events/deletable", "delete_events", rows_of(Query::all("EventCalendar"))));
  out.push_back(get("/events/location/{loc}", "get_location_events",
                    [](const Params& p, DataAccess& data) {
                      return data.fetch(Query::all("EventCalendar").filter("location", Value(p.at("loc"))))
                          .to_json();
                    }));
  return out;
}

std::vector<Endpoint> social_endpoints() {
  std::vector<Endpoint> out;
  out.push_back(get("/posts", "posts_view", rows_of(Query::all("Post"))));
  out.push_back(get("/profile/{uid}", "profile_view", [](const Params& p, DataAccess& data) {
    const std::int64_t uid = int_param(p, "uid");
    ojson body = ojson::object();
    body["profile"] = data.fetch(Query::all("User").filter("id", Value(uid))).to_json();
    body["posts"] = data.fetch(Query::all("Post").filter("user", Value(uid))).to_json();
    return body;
  }));
  return out;
}

}  // namespace ctxpol
