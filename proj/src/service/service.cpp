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

#include <charconv>

#include "ctxpol/errors.hpp"
#include "ctxpol/service.hpp"

namespace ctxpol {

ResultSet EnforcedAccess::fetch(const Query& q) {
  EnforceOptions options;
  options.check_field_scope = check_;
  EnforcementTrace trace;
  if (traces_ != nullptr) options.trace = &trace;
  ResultSet rs = enforce(registry_, db_, q, ctx_, options);
  if (traces_ != nullptr) traces_->push_back(std::move(trace));
  return rs;
}

UserContext resolve_user(const Database& db, const std::optional<std::string>& user_header) {
  if (!user_header) return UserContext::anonymous();
  const std::string& text = *user_header;
  std::int64_t id = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc() || end != text.data() + text.size() || id <= 0) {
    return UserContext::anonymous();
  }
  const TableSchema* users = db.catalog().find("User");
  if (users == nullptr || !users->primary_key) return UserContext::anonymous();
  auto row = db.find("User", Value(id));
  if (!row) return UserContext::anonymous();

  UserContext u;
  u.id = id;
  u.authenticated = true;
  for (std::size_t i = 0; i < users->columns.size(); ++i) {
    if (users->columns[i].name != *users->primary_key) u.attributes[users->columns[i].name] = (*row)[i];
  }
  return u;
}

std::map<std::string, Backend> enforced_backends(const std::vector<Endpoint>& endpoints,
                                                 const PolicyRegistry& registry,
                                                 const Database& db, bool check_field_scope) {
  std::map<std::string, Backend> out;
  for (const auto& e : endpoints) {
    out.emplace(e.route.api.name(),
                [&registry, &db, check_field_scope, handler = e.handler](
                    const Params& params, const RequestContext& ctx,
                    std::vector<EnforcementTrace>* traces) {
                  EnforcedAccess access(registry, db, ctx, check_field_scope || traces != nullptr,
                                        traces);
                  return handler(params, access);
                });
  }
  return out;
}

Response error_response(int status, std::string code, std::string message) {
  Response r;
  r.status = status;
  r.body = nlohmann::ordered_json{{"code", std::move(code)}, {"message", std::move(message)}};
  return r;
}

Service::Service(const Database& db, Router router, std::map<std::string, Backend> backends,
                 ServiceOptions options)
    : db_(db), router_(std::move(router)), backends_(std::move(backends)), options_(options) {
  for (const auto& r : router_.routes()) {
    if (!backends_.count(r.api.name())) throw BuildError("no backend for API " + r.api.name());
  }
}

RequestContext Service::build_context(const Request& request, const ApiId& api) const {
  return RequestContext{resolve_user(db_, request.user_header), api};
}

Response Service::dispatch(const Request& request) const {
  if (request.method == "GET" && request.path == "/healthz") {
    Response r;
    r.body = nlohmann::ordered_json{{"status", "ok"}};
    return r;
  }
  auto match = router_.match(request.method, request.path);
  if (!match) return error_response(404, "not_found", "no route for " + request.path);

  const RequestContext ctx = build_context(request, match->route->api);
  std::vector<EnforcementTrace> traces;
  Response out;
  try {
    out.body = backends_.at(ctx.api.name())(match->params, ctx,
                                            options_.debug_trace ? &traces : nullptr);
  } catch (const PolicyFault& e) {
    out = error_response(500, "policy_fault", e.what());
  } catch (const FieldScopeError& e) {
    out = error_response(500, "field_scope", e.what());
  } catch (const RequestError& e) {
    out = error_response(400, "bad_request", e.what());
  } catch (const Error& e) {
    out = error_response(500, "internal", e.what());
  }
  if (options_.debug_trace) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : traces) arr.push_back(t.to_json());
    out.trace_header = arr.dump();
  }
  return out;
}

}  // namespace ctxpol
