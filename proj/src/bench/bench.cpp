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
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "ctxpol/bench.hpp"
#include "ctxpol/errors.hpp"

namespace ctxpol {

namespace {

using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

ojson stats_json(const LatencyStats& s) {
  return ojson{{"median_us", s.median}, {"mean_us", s.mean}, {"stddev_us", s.stddev}, {"samples", s.samples}};
}

double relative(double value, double base) { return base > 0 ? (value - base) / base : 0.0; }

// One way of serving a request: in-process dispatch or a keep-alive HTTP
// client against a loopback server.
class Target {
 public:
  virtual ~Target() = default;
  virtual int send(const Request& r) = 0;
};

class LocalTarget : public Target {
 public:
  explicit LocalTarget(const Service& s) : service_(s) {}
  int send(const Request& r) override { return service_.dispatch(r).status; }

 private:
  const Service& service_;
};

class HttpTarget : public Target {
 public:
  explicit HttpTarget(int port) : client_("127.0.0.1", port) {
    client_.set_keep_alive(true);
    client_.set_tcp_nodelay(true);
  }
  int send(const Request& r) override {
    httplib::Headers h;
    if (r.user_header) h.emplace("X-User-Id", *r.user_header);
    auto res = client_.Get(r.path, h);
    if (!res) throw Error("request " + r.path + " failed: " + httplib::to_string(res.error()));
    return res->status;
  }

 private:
  httplib::Client client_;
};

// A loopback server running on its own thread for the lifetime of the object.
class Running {
 public:
  explicit Running(const Service& s) : server_(s) {
    if (!server_.bind("127.0.0.1", 0)) throw Error("cannot bind a loopback port");
    thread_ = std::thread([this] { server_.listen(); });
    server_.wait_until_ready();
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  int port() const { return server_.port(); }

 private:
  HttpServer server_;
  std::thread thread_;
};

// Both modes behind one service. Baseline routes carry a path prefix, so the
// two share the server, the connection, the worker thread and the router.
const std::string kBaselinePrefix = "/_baseline";

Service combined_service(const Scenario& s) {
  Router router;
  std::map<std::string, Backend> backends = enforced_backends(s.endpoints, s.registry, s.db);
  std::map<std::string, Backend> inline_handlers = baseline_backends(s);
  for (const auto& e : s.endpoints) {
    Route b = e.route;
    b.path = kBaselinePrefix + b.path;
    b.api = ApiId(e.route.api.name() + "/baseline");
    router.add(e.route);
    router.add(b);
    backends.emplace(b.api.name(), inline_handlers.at(e.route.api.name()));
  }
  return Service(s.db, std::move(router), std::move(backends));
}

Request as_baseline(Request r) {
  r.path = kBaselinePrefix + r.path;
  return r;
}

std::vector<Request> as_baseline(const std::vector<Request>& plan) {
  std::vector<Request> out;
  out.reserve(plan.size());
  for (const auto& r : plan) out.push_back(as_baseline(r));
  return out;
}

using TargetFactory = std::function<std::unique_ptr<Target>()>;

double timed(Target& t, const Request& r) {
  const auto start = Clock::now();
  const int status = t.send(r);
  const auto end = Clock::now();
  if (status != 200) throw Error("request " + r.path + " answered " + std::to_string(status));
  return micros(end - start);
}

double throughput_run(const TargetFactory& make, const std::vector<Request>& plan, const BenchConfig& c) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::unique_ptr<Target>> targets;
  for (std::size_t i = 0; i < c.concurrency; ++i) targets.push_back(make());
  const auto start = Clock::now();
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < c.concurrency; ++i) {
    workers.emplace_back([&, i] {
      try {
        for (std::size_t j = next++; j < c.requests; j = next++) {
          if (targets[i]->send(plan[j % plan.size()]) != 200) failed = true;
        }
      } catch (const std::exception&) {
        failed = true;
      }
    });
  }
  for (auto& w : workers) w.join();
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (failed) throw Error("throughput run had failing requests");
  return static_cast<double>(c.requests) / seconds;
}

std::string checksum_hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

double median_of(std::vector<double> v) { return summarize(std::move(v)).median; }

}  // namespace

void BenchConfig::validate() const {
  if (trials == 0) throw BuildError("trials must be at least 1");
  if (requests == 0) throw BuildError("requests must be at least 1");
  if (concurrency == 0) throw BuildError("concurrency must be at least 1");
  if (throughput_repeats == 0) throw BuildError("throughput repeats must be at least 1");
  if (users == 0) throw BuildError("users must be at least 1");
  if (scale <= 0) throw BuildError("scale must be positive");
  for (auto k : wide_columns) {
    if (k == 0 || k > 100) throw BuildError("wide column counts must be in 1..100");
  }
}

LatencyStats summarize(std::vector<double> v) {
  LatencyStats s;
  s.samples = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(n);
  double sq = 0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stddev = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
  return s;
}

BenchReport run_bench(const BenchConfig& config) {
  config.validate();
  ScenarioOptions so;
  so.scale = config.scale;
  so.seed = config.seed;
  Scenario scenario = load_scenario(config.scenario, so);

  BenchReport report;
  report.config = config;
  report.snapshot_checksum = checksum_hex(snapshot_checksum(scenario.db));

  std::vector<std::string> apis = config.endpoints;
  if (apis.empty()) {
    for (const auto& e : scenario.endpoints) apis.push_back(e.route.api.name());
  }
  const Router router = router_for(scenario.endpoints);
  for (const auto& api : apis) {
    if (std::none_of(router.routes().begin(), router.routes().end(),
                     [&](const Route& r) { return r.api.name() == api; })) {
      throw Error("unknown endpoint '" + api + "' for scenario " + config.scenario);
    }
  }

  // Signed-in requests only: anonymous requests short-circuit in both modes
  // and say little about enforcement cost.
  std::map<std::string, std::vector<Request>> per_api;
  std::vector<Request> mixed;
  std::set<std::string> users;
  for (auto& r : sample_requests(scenario, config.users, config.seed)) {
    if (!r.user_header) continue;
    const std::string api = router.match(r.method, r.path)->route->api.name();
    if (std::find(apis.begin(), apis.end(), api) == apis.end()) continue;
    users.insert(*r.user_header);
    mixed.push_back(r);
    per_api[api].push_back(std::move(r));
  }
  // Wide endpoints ignore the user, so anonymous requests still measure.
  if (mixed.empty()) {
    for (auto& r : sample_requests(scenario, 0, config.seed)) {
      const std::string api = router.match(r.method, r.path)->route->api.name();
      if (std::find(apis.begin(), apis.end(), api) == apis.end()) continue;
      mixed.push_back(r);
      per_api[api].push_back(std::move(r));
    }
  }
  report.users = users.size();

  Service service = combined_service(scenario);
  std::optional<Running> server;
  if (config.http) server.emplace(service);
  const TargetFactory make = [&]() -> std::unique_ptr<Target> {
    if (server) return std::make_unique<HttpTarget>(server->port());
    return std::make_unique<LocalTarget>(service);
  };

  {
    auto t = make();
    for (const auto& api : apis) {
      const auto& plan = per_api[api];
      if (plan.empty()) continue;
      const auto base_plan = as_baseline(plan);
      for (std::size_t i = 0; i < config.warmup; ++i) {
        timed(*t, plan[i % plan.size()]);
        timed(*t, base_plan[i % plan.size()]);
      }
      std::vector<double> es, bs;
      std::vector<std::vector<double>> es_by(plan.size()), bs_by(plan.size());
      for (std::size_t i = 0; i < config.trials; ++i) {
        const std::size_t k = i % plan.size();
        // The second request of a pair runs on warmer caches. Flip the order
        // once per pass over the plan so every request sees both orders.
        double e, b;
        if ((i / plan.size()) % 2 == 0) {
          e = timed(*t, plan[k]);
          b = timed(*t, base_plan[k]);
        } else {
          b = timed(*t, base_plan[k]);
          e = timed(*t, plan[k]);
        }
        es.push_back(e);
        bs.push_back(b);
        es_by[k].push_back(e);
        bs_by[k].push_back(b);
      }
      // Requests in a plan differ in cost by orders of magnitude, so the
      // overhead compares per-request medians summed over the plan.
      double e_sum = 0, b_sum = 0;
      for (std::size_t k = 0; k < plan.size(); ++k) {
        if (es_by[k].empty()) continue;
        e_sum += median_of(es_by[k]);
        b_sum += median_of(bs_by[k]);
      }
      EndpointResult res;
      res.api = api;
      res.enforced = summarize(es);
      res.baseline = summarize(bs);
      res.overhead = relative(e_sum, b_sum);
      res.mean_overhead = relative(res.enforced.mean, res.baseline.mean);
      report.endpoints.push_back(std::move(res));
    }
  }

  if (config.throughput && !mixed.empty()) {
    ThroughputResult t;
    const auto mixed_base = as_baseline(mixed);
    throughput_run(make, mixed, config);
    throughput_run(make, mixed_base, config);
    for (std::size_t i = 0; i < config.throughput_repeats; ++i) {
      if (i % 2 == 0) {
        t.enforced_runs.push_back(throughput_run(make, mixed, config));
        t.baseline_runs.push_back(throughput_run(make, mixed_base, config));
      } else {
        t.baseline_runs.push_back(throughput_run(make, mixed_base, config));
        t.enforced_runs.push_back(throughput_run(make, mixed, config));
      }
    }
    t.enforced_rps = median_of(t.enforced_runs);
    t.baseline_rps = median_of(t.baseline_runs);
    // Machine speed drifts between runs; adjacent runs share the drift.
    std::vector<double> ratios;
    for (std::size_t i = 0; i < t.enforced_runs.size(); ++i) {
      if (t.baseline_runs[i] > 0) ratios.push_back(t.enforced_runs[i] / t.baseline_runs[i]);
    }
    t.degradation = ratios.empty() ? 0.0 : 1.0 - median_of(ratios);
    report.throughput = std::move(t);
  }

  if (config.scenario == "wide") report.wide = run_wide_sweep(config);
  return report;
}

std::vector<WidePoint> run_wide_sweep(const BenchConfig& config) {
  config.validate();
  ScenarioOptions so;
  so.scale = config.scale;
  so.seed = config.seed;
  Scenario scenario = load_scenario("wide", so);
  const Database& db = scenario.db;
  const RequestContext ctx{UserContext::anonymous(), ApiId("wide_rows")};

  std::vector<WidePoint> out;
  for (std::size_t k : config.wide_columns) {
    const PolicyRegistry reg = wide_registry(k);
    std::chrono::nanoseconds store{0};
    EnforceOptions opts;
    opts.store_time = &store;

    struct Sample {
      double enforcement, enforced_exec, build, exec;
    };
    // Both sides build their query per request, as handlers do.
    auto enforced_once = [&](Sample& s) {
      const auto start = Clock::now();
      ResultSet rs = enforce(reg, db, wide_query(), ctx, opts);
      const auto total = Clock::now() - start;
      s.enforcement = micros(total - store);
      s.enforced_exec = micros(store);
      return rs.size();
    };
    // Freeing the k-atom predicate is part of building it; enforce frees
    // its rewritten query inside the timed region too.
    auto baseline_once = [&](Sample& s) {
      const auto start = Clock::now();
      std::optional<Query> q(wide_inline_query(k));
      const auto built = Clock::now();
      ResultSet rs = db.execute(*q);
      const auto executed = Clock::now();
      q.reset();
      s.build = micros((built - start) + (Clock::now() - executed));
      s.exec = micros(executed - built);
      return rs.size();
    };

    Sample scratch{};
    for (std::size_t i = 0; i < config.warmup; ++i) {
      enforced_once(scratch);
      baseline_once(scratch);
    }
    std::vector<double> enforcement, exec, build, base, added;
    for (std::size_t i = 0; i < config.trials; ++i) {
      Sample s{};
      if (i % 2 == 0) {
        enforced_once(s);
        baseline_once(s);
      } else {
        baseline_once(s);
        enforced_once(s);
      }
      enforcement.push_back(s.enforcement);
      exec.push_back(s.enforced_exec);
      build.push_back(s.build);
      base.push_back(s.exec);
      added.push_back(s.enforcement - s.build);
    }
    WidePoint p;
    p.columns = k;
    p.enforcement = summarize(enforcement);
    p.inline_build = summarize(build);
    p.added = summarize(added);
    p.baseline = summarize(base);
    p.enforced_execute = summarize(exec);
    out.push_back(p);
  }
  return out;
}

ojson BenchReport::to_json() const {
  ojson eps = ojson::array();
  for (const auto& r : endpoints) {
    eps.push_back(ojson{{"api", r.api},
                        {"enforced", stats_json(r.enforced)},
                        {"baseline", stats_json(r.baseline)},
                        {"overhead", r.overhead},
                        {"mean_overhead", r.mean_overhead}});
  }
  ojson tp = nullptr;
  if (throughput) {
    tp = ojson{{"concurrency", config.concurrency},
               {"requests", config.requests},
               {"enforced_rps", throughput->enforced_rps},
               {"baseline_rps", throughput->baseline_rps},
               {"degradation", throughput->degradation},
               {"enforced_runs", throughput->enforced_runs},
               {"baseline_runs", throughput->baseline_runs}};
  }
  ojson wide_json = ojson::array();
  for (const auto& w : wide) {
    wide_json.push_back(ojson{{"columns", w.columns},
                              {"added", stats_json(w.added)},
                              {"enforcement", stats_json(w.enforcement)},
                              {"inline_build", stats_json(w.inline_build)},
                              {"baseline", stats_json(w.baseline)},
                              {"enforced_execute", stats_json(w.enforced_execute)}});
  }
  return ojson{{"schema_version", 1},
               {"scenario", config.scenario},
               {"scale", config.scale},
               {"seed", config.seed},
               {"snapshot_checksum", snapshot_checksum},
               {"mode", config.http ? "http" : "in-process"},
               {"users", users},
               {"config",
                ojson{{"trials", config.trials},
                      {"warmup", config.warmup},
                      {"concurrency", config.concurrency},
                      {"requests", config.requests},
                      {"throughput_repeats", config.throughput_repeats}}},
               {"endpoints", std::move(eps)},
               {"throughput", std::move(tp)},
               {"wide", std::move(wide_json)}};
}

std::string BenchReport::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << "scenario " << config.scenario << "  scale " << config.scale << "  seed " << config.seed
      << "  snapshot " << snapshot_checksum << "  " << (config.http ? "http" : "in-process") << "\n";
  if (!endpoints.empty()) {
    out << std::left << std::setw(22) << "endpoint" << std::right << std::setw(14) << "enforced_med"
        << std::setw(14) << "baseline_med" << std::setw(12) << "enf_sd" << std::setw(12) << "base_sd"
        << std::setw(11) << "overhead" << "\n";
    for (const auto& r : endpoints) {
      out << std::left << std::setw(22) << r.api << std::right << std::setw(12) << r.enforced.median
          << "us" << std::setw(12) << r.baseline.median << "us" << std::setw(10) << r.enforced.stddev
          << "us" << std::setw(10) << r.baseline.stddev << "us" << std::setw(10) << r.overhead * 100
          << "%\n";
    }
  }
  if (throughput) {
    out << "throughput  c=" << config.concurrency << " n=" << config.requests << "  enforced "
        << throughput->enforced_rps << " req/s  baseline " << throughput->baseline_rps
        << " req/s  degradation " << throughput->degradation * 100 << "%\n";
  }
  if (!wide.empty()) {
    out << std::left << std::setw(10) << "columns" << std::right << std::setw(14) << "added_med"
        << std::setw(16) << "enforcement" << std::setw(16) << "inline_build" << std::setw(16)
        << "baseline_exec" << std::setw(16) << "enforced_exec" << "\n";
    for (const auto& w : wide) {
      out << std::left << std::setw(10) << w.columns << std::right << std::setw(12) << w.added.median
          << "us" << std::setw(14) << w.enforcement.median << "us" << std::setw(14)
          << w.inline_build.median << "us" << std::setw(14) << w.baseline.median << "us"
          << std::setw(14) << w.enforced_execute.median << "us\n";
    }
  }
  return out.str();
}

}  // namespace ctxpol
