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

#include "ctxpol/errors.hpp"
#include "ctxpol/service.hpp"

namespace ctxpol {

namespace {

std::vector<std::string_view> segments(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    if (next > pos) out.push_back(path.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

bool is_placeholder(std::string_view seg) {
  return seg.size() > 2 && seg.front() == '{' && seg.back() == '}';
}

}  // namespace

void Router::add(Route route) {
  if (route.path.empty() || route.path.front() != '/') {
    throw BuildError("route path must start with '/': " + route.path);
  }
  for (const auto& r : routes_) {
    if (r.api == route.api) throw BuildError("duplicate API " + route.api.name());
    if (r.method == route.method && r.path == route.path) {
      throw BuildError("duplicate route " + route.path);
    }
  }
  routes_.push_back(std::move(route));
}

std::optional<Router::Match> Router::match(std::string_view method, std::string_view path) const {
  const auto want = segments(path);
  for (const auto& r : routes_) {
    if (r.method != method) continue;
    const auto tmpl = segments(r.path);
    if (tmpl.size() != want.size()) continue;
    Params params;
    bool ok = true;
    for (std::size_t i = 0; i < tmpl.size() && ok; ++i) {
      if (is_placeholder(tmpl[i])) {
        params.emplace(std::string(tmpl[i].substr(1, tmpl[i].size() - 2)), std::string(want[i]));
      } else {
        ok = tmpl[i] == want[i];
      }
    }
    if (ok) return Match{&r, std::move(params)};
  }
  return std::nullopt;
}

Router router_for(const std::vector<Endpoint>& endpoints) {
  Router r;
  for (const auto& e : endpoints) r.add(e.route);
  return r;
}

}  // namespace ctxpol
