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

// HTTP front end for the intranet and social applications.
//
// Handlers never see the database. They receive a DataAccess and build plain
// application queries; the enforcing implementation routes every query through
// the policy engine. The middleware turns the X-User-Id header into the
// request's user and the matched route into its API identifier.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctxpol/errors.hpp"
#include "ctxpol/policy.hpp"

namespace ctxpol {

/// Malformed request parameter; answered with 400.
class RequestError : public Error {
 public:
  using Error::Error;
};

using Params = std::map<std::string, std::string, std::less<>>;

/// A path template such as "/events/location/{loc}" bound to a handler name.
struct Route {
  std::string method;
  std::string path;
  ApiId api;
};

class Router {
 public:
  struct Match {
    const Route* route;
    Params params;
  };

  /// Throws BuildError on a duplicate API name or template.
  void add(Route route);
  std::optional<Match> match(std::string_view method, std::string_view path) const;
  const std::vector<Route>& routes() const noexcept { return routes_; }

 private:
  std::vector<Route> routes_;
};

/// The only store access a handler gets.
class DataAccess {
 public:
  virtual ~DataAccess() = default;
  virtual ResultSet fetch(const Query& q) = 0;
};

/// DataAccess that enforces the registry on every query.
class EnforcedAccess : public DataAccess {
 public:
  EnforcedAccess(const PolicyRegistry& registry, const Database& db, const RequestContext& ctx,
                 bool check_field_scope = false, std::vector<EnforcementTrace>* traces = nullptr)
      : registry_(registry), db_(db), ctx_(ctx), check_(check_field_scope), traces_(traces) {}

  ResultSet fetch(const Query& q) override;

 private:
  const PolicyRegistry& registry_;
  const Database& db_;
  const RequestContext& ctx_;
  bool check_;
  std::vector<EnforcementTrace>* traces_;
};

/// Application handler: builds queries, shapes the JSON body.
using AppHandler = std::function<nlohmann::ordered_json(const Params&, DataAccess&)>;

struct Endpoint {
  Route route;
  AppHandler handler;
};

std::vector<Endpoint> intranet_endpoints();
std::vector<Endpoint> social_endpoints();

struct Request {
  std::string method = "GET";
  std::string path;
  std::optional<std::string> user_header;  // X-User-Id
};

struct Response {
  int status = 200;
  nlohmann::ordered_json body;
  std::optional<std::string> trace_header;  // X-Policy-Trace

  std::string body_text() const { return body.dump(); }
};

/// Resolves the requesting user against the User table. Absent, malformed or
/// unknown ids yield the anonymous user. The lookup is a direct key read, not
/// a query execution.
UserContext resolve_user(const Database& db, const std::optional<std::string>& user_header);

/// Handler backend used by the dispatcher; `traces` is non-null in debug mode.
using Backend = std::function<nlohmann::ordered_json(const Params&, const RequestContext&,
                                                     std::vector<EnforcementTrace>* traces)>;

/// Wraps application handlers so every query goes through the engine.
std::map<std::string, Backend> enforced_backends(const std::vector<Endpoint>& endpoints,
                                                 const PolicyRegistry& registry,
                                                 const Database& db,
                                                 bool check_field_scope = false);

struct ServiceOptions {
  /// Adds the X-Policy-Trace header and turns on the post-body scope check.
  bool debug_trace = false;
};

class Service {
 public:
  /// `backends` is keyed by API name; every route needs one.
  Service(const Database& db, Router router, std::map<std::string, Backend> backends,
          ServiceOptions options = {});

  RequestContext build_context(const Request& request, const ApiId& api) const;
  Response dispatch(const Request& request) const;
  const Router& router() const noexcept { return router_; }

 private:
  const Database& db_;
  Router router_;
  std::map<std::string, Backend> backends_;
  ServiceOptions options_;
};

Router router_for(const std::vector<Endpoint>& endpoints);

/// Error envelope {code, message}.
Response error_response(int status, std::string code, std::string message);

/// Blocking HTTP/1.1 server around a Service.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving. Port 0 picks a free port. Returns false when the
  /// address is unavailable.
  bool bind(const std::string& host, int port);
  int port() const noexcept { return port_; }
  /// Serves until stop(). Requires a successful bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace ctxpol
