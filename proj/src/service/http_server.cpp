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

#include "httplib.h"

#include "ctxpol/service.hpp"

namespace ctxpol {

namespace {
// Keep-alive connections hold a worker each, so the pool must exceed the
// client concurrency the bench drives.
constexpr std::size_t kWorkers = 32;
}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>()) {
  auto handle = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    if (req.has_header("X-User-Id")) r.user_header = req.get_header_value("X-User-Id");
    Response out = service.dispatch(r);
    res.status = out.status;
    if (out.trace_header) res.set_header("X-Policy-Trace", *out.trace_header);
    res.set_content(out.body_text(), "application/json");
  };
  impl_->server.set_tcp_nodelay(true);
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(kWorkers); };
  impl_->server.Get(".*", handle);
  // The library default also sets SO_REUSEPORT, which would let a second
  // server share a port that is already taken.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  impl_->server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    Response out = error_response(res.status, res.status == 404 ? "not_found" : "http_error",
                                  req.method + " " + req.path);
    res.set_content(out.body_text(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace ctxpol
