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

// ctxpol: explain, seed, bench, equivalence and serve.
//
// Exit codes: 0 ok, 1 check failure, 2 usage or IO error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "ctxpol/bench.hpp"
#include "ctxpol/errors.hpp"

namespace {

using namespace ctxpol;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

const std::map<std::string, FixtureKind> kFixtures{
    {"seeded", FixtureKind::Seeded}, {"small", FixtureKind::Small}, {"empty", FixtureKind::Empty}};

struct Common {
  std::string scenario = "intranet";
  std::string fixture = "seeded";
  double scale = 1.0;
  std::uint64_t seed = 7;
  std::string format = "table";
  std::string out;

  ScenarioOptions options() const {
    ScenarioOptions o;
    o.scale = scale;
    o.seed = seed;
    o.fixture = kFixtures.at(fixture);
    return o;
  }
};

void add_scenario(CLI::App* app, Common& c) {
  std::vector<std::string> names = scenario_names();
  app->add_option("--scenario", c.scenario, "Scenario name")->check(CLI::IsMember(names));
  app->add_option("--fixture", c.fixture, "Data: seeded, small or empty")
      ->check(CLI::IsMember({"seeded", "small", "empty"}))
      ->envname("CTXPOL_FIXTURE");
  app->add_option("--scale", c.scale, "Seed size factor")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "RNG seed");
}

void add_format(CLI::App* app, Common& c) {
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "table"}));
  app->add_option("--out", c.out, "Also write JSON to this file");
}

// Writes JSON to --out when given. Returns false on IO failure.
bool write_out(const std::string& path, const nlohmann::ordered_json& j) {
  if (path.empty()) return true;
  std::ofstream f(path);
  if (!f) {
    std::cerr << "error: cannot write " << path << "\n";
    return false;
  }
  f << j.dump(2) << "\n";
  return static_cast<bool>(f);
}

int emit(const Common& c, const nlohmann::ordered_json& j, const std::string& table) {
  std::cout << (c.format == "json" ? j.dump(2) + "\n" : table);
  return write_out(c.out, j) ? kOk : kUsage;
}

int run_explain(const Common& c, const std::string& endpoint, const std::string& table,
                std::optional<std::int64_t> user, const std::optional<std::string>& arg) {
  if (endpoint.empty() == table.empty()) {
    std::cerr << "error: give exactly one of --endpoint and --table\n";
    return kUsage;
  }
  Scenario s = load_scenario(c.scenario, c.options());
  Explanation ex = endpoint.empty() ? explain_table(s, table, user) : explain_endpoint(s, endpoint, user, arg);
  return emit(c, ex.to_json(), ex.to_table());
}

int run_seed(const Common& c) {
  if (c.out.empty()) {
    std::cerr << "error: --out is required\n";
    return kUsage;
  }
  Scenario s = load_scenario(c.scenario, c.options());
  std::ofstream f(c.out);
  if (!f) {
    std::cerr << "error: cannot write " << c.out << "\n";
    return kUsage;
  }
  f << snapshot_text(s.db);
  if (!f) {
    std::cerr << "error: write to " << c.out << " failed\n";
    return kUsage;
  }
  std::cout << "wrote " << c.out << "  scenario " << s.name << "  scale " << c.scale << "\n";
  for (const auto& t : s.db.catalog().tables()) {
    std::cout << "  " << t.name << " " << s.db.row_count(t.name) << " rows\n";
  }
  std::printf("  checksum %016llx\n", static_cast<unsigned long long>(snapshot_checksum(s.db)));
  return kOk;
}

int run_equivalence(const Common& c, std::size_t users, std::optional<std::size_t> drop) {
  Scenario s = load_scenario(c.scenario, c.options());
  std::optional<PolicyRegistry> mutated;
  if (drop) {
    if (*drop >= s.registry.size()) {
      std::cerr << "error: --drop-policy " << *drop << " out of range (" << s.registry.size() << " policies)\n";
      return kUsage;
    }
    mutated = without_policy(s.registry, *drop);
  }
  EquivalenceReport r = equivalence_report(s, sample_requests(s, users, c.seed), mutated ? &*mutated : nullptr);
  const int code = emit(c, r.to_json(), r.to_table());
  if (code != kOk) return code;
  return r.ok() ? kOk : kCheckFailed;
}

int run_bench_cmd(const Common& c, BenchConfig cfg, std::optional<double> max_overhead) {
  cfg.scenario = c.scenario;
  cfg.scale = c.scale;
  cfg.seed = c.seed;
  BenchReport r = run_bench(cfg);
  const int code = emit(c, r.to_json(), r.to_table());
  if (code != kOk || !max_overhead) return code;
  bool ok = true;
  for (const auto& e : r.endpoints) ok = ok && e.overhead <= *max_overhead;
  if (r.throughput) ok = ok && r.throughput->degradation <= *max_overhead;
  return ok ? kOk : kCheckFailed;
}

int run_serve(const Common& c, const std::string& host, int port, const std::string& snapshot, bool debug) {
  Scenario s = load_scenario(c.scenario, c.options());
  if (!snapshot.empty()) {
    try {
      s.db = load_snapshot_file(snapshot);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsage;
    }
  }
  ServiceOptions opts;
  opts.debug_trace = debug;
  Service svc(s.db, router_for(s.endpoints), enforced_backends(s.endpoints, s.registry, s.db), opts);
  HttpServer server(svc);
  if (!server.bind(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return kUsage;
  }
  std::cout << "serving " << s.name << " on http://" << host << ":" << server.port() << std::endl;
  return server.listen() ? kOk : kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware data access policies: explain, seed, bench, equivalence, serve"};
  app.require_subcommand(1);
  Common c;

  auto* explain = app.add_subcommand("explain", "Show how a request is enforced");
  std::string endpoint, table;
  std::optional<std::int64_t> user;
  std::optional<std::string> arg;
  add_scenario(explain, c);
  add_format(explain, c);
  explain->add_option("--endpoint", endpoint, "API name, e.g. get_location_events");
  explain->add_option("--table", table, "Enforce Table.all() instead of an endpoint");
  explain->add_option("--user", user, "Requesting user id; omit for anonymous");
  explain->add_option("--arg", arg, "Value for the route's path parameter");

  auto* seed = app.add_subcommand("seed", "Write a scenario snapshot");
  add_scenario(seed, c);
  seed->add_option("--out", c.out, "Snapshot path")->required();

  auto* equiv = app.add_subcommand("equivalence", "Compare enforced and inline-baseline responses");
  std::size_t users = 50;
  std::optional<std::size_t> drop;
  add_scenario(equiv, c);
  add_format(equiv, c);
  equiv->add_option("--users", users, "Sampled signed-in users (anonymous is always added)");
  equiv->add_option("--drop-policy", drop, "Remove the policy with this registration index first");

  auto* bench = app.add_subcommand("bench", "Measure enforcement overhead against the inline baseline");
  BenchConfig cfg;
  std::optional<double> max_overhead;
  bool in_process = false;
  bool no_throughput = false;
  add_scenario(bench, c);
  add_format(bench, c);
  bench->add_option("--endpoint", cfg.endpoints, "API name (repeatable); default all");
  bench->add_option("--trials", cfg.trials, "Latency trials per endpoint")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", cfg.warmup, "Untimed requests per endpoint and mode");
  bench->add_option("--concurrency", cfg.concurrency, "Throughput client threads")->check(CLI::PositiveNumber);
  bench->add_option("--requests", cfg.requests, "Requests per throughput run")->check(CLI::PositiveNumber);
  bench->add_option("--repeats", cfg.throughput_repeats, "Throughput runs per mode")->check(CLI::PositiveNumber);
  bench->add_option("--users", cfg.users, "Signed-in users cycled by the trials")->check(CLI::PositiveNumber);
  bench->add_option("--columns", cfg.wide_columns, "Wide sweep column counts")->check(CLI::Range(1, 100));
  bench->add_flag("--in-process", in_process, "Call the dispatcher directly instead of loopback HTTP");
  bench->add_flag("--no-throughput", no_throughput, "Skip the throughput runs");
  bench->add_option("--max-overhead", max_overhead, "Exit 1 when an overhead exceeds this fraction");

  auto* serve = app.add_subcommand("serve", "Serve a scenario over HTTP");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshot;
  bool debug = false;
  add_scenario(serve, c);
  serve->add_option("--host", host, "Bind address")->envname("CTXPOL_HOST");
  serve->add_option("--port", port, "Port; 0 picks a free one")->check(CLI::Range(0, 65535))->envname("CTXPOL_PORT");
  serve->add_option("--snapshot", snapshot, "Load data from a snapshot instead of seeding")
      ->envname("CTXPOL_SNAPSHOT");
  serve->add_flag("--debug-trace", debug, "Add X-Policy-Trace headers and check post-eval field scope")
      ->envname("CTXPOL_DEBUG_TRACE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*explain) return run_explain(c, endpoint, table, user, arg);
    if (*seed) return run_seed(c);
    if (*equiv) return run_equivalence(c, users, drop);
    if (*bench) {
      cfg.http = !in_process;
      cfg.throughput = !no_throughput;
      return run_bench_cmd(c, cfg, max_overhead);
    }
    if (*serve) return run_serve(c, host, port, snapshot, debug);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
