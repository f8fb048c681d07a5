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

// Latency, throughput and policy-complexity measurements comparing enforced
// handlers with the inline baseline, plus the explain tool.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctxpol/fixtures.hpp"

namespace ctxpol {

struct BenchConfig {
  std::string scenario = "intranet";
  /// API names; empty means every endpoint of the scenario.
  std::vector<std::string> endpoints;
  std::size_t trials = 100;
  std::size_t concurrency = 10;
  std::size_t requests = 500;
  std::size_t warmup = 10;
  /// Throughput runs per mode; the median is reported.
  std::size_t throughput_repeats = 3;
  double scale = 1.0;
  std::uint64_t seed = 7;
  /// Users cycled through by the latency trials.
  std::size_t users = 10;
  /// Measure over loopback HTTP; otherwise call dispatch in-process.
  bool http = true;
  bool throughput = true;
  /// Policy column counts for the wide scenario.
  std::vector<std::size_t> wide_columns{1, 10, 25, 50, 100};

  /// Throws BuildError when a count is zero.
  void validate() const;
};

/// Microseconds.
struct LatencyStats {
  double median = 0;
  double mean = 0;
  double stddev = 0;
  std::size_t samples = 0;
};

LatencyStats summarize(std::vector<double> samples_us);

struct EndpointResult {
  std::string api;
  LatencyStats enforced;
  LatencyStats baseline;
  /// (enforced - baseline) / baseline. `overhead` uses each sampled
  /// request's median latency summed over the plan; `mean_overhead` uses the
  /// pooled means.
  double overhead = 0;
  double mean_overhead = 0;
};

struct ThroughputResult {
  double enforced_rps = 0;
  double baseline_rps = 0;
  /// 1 - enforced / baseline, as the median over adjacent pairs of runs.
  double degradation = 0;
  std::vector<double> enforced_runs;
  std::vector<double> baseline_runs;
};

struct WidePoint {
  std::size_t columns = 0;
  /// Per trial: enforcement minus inline_build. What enforcement adds over
  /// the inline handler, with the shared store execution left out.
  LatencyStats added;
  /// Time enforce spends outside the store execution.
  LatencyStats enforcement;
  /// Time the inline handler spends building its k-filter query.
  LatencyStats inline_build;
  /// The inline query's execution time.
  LatencyStats baseline;
  /// The enforced query's execution time.
  LatencyStats enforced_execute;
};

struct BenchReport {
  BenchConfig config;
  /// 16 hex digits.
  std::string snapshot_checksum;
  std::size_t users = 0;
  std::vector<EndpointResult> endpoints;
  std::optional<ThroughputResult> throughput;
  std::vector<WidePoint> wide;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

/// Latency per endpoint and throughput for a request-serving scenario.
BenchReport run_bench(const BenchConfig& config);

/// Enforcement overhead of the k-column policy for each k in the config.
std::vector<WidePoint> run_wide_sweep(const BenchConfig& config);

struct Explanation {
  std::string scenario;
  std::string request;
  std::string user;
  Response response;
  std::vector<EnforcementTrace> traces;
  /// Per trace: generic policies that matched but lost to an API-specific one.
  struct Suppressed {
    std::vector<std::string> pre;
    std::vector<std::string> post;
  };
  std::vector<Suppressed> suppressed;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

/// Serves one request to `api` with tracing on. `arg` fills the route's path
/// parameter; without it a value is taken from the data. Throws Error for an
/// unknown API or user.
Explanation explain_endpoint(const Scenario& scenario, const std::string& api,
                             std::optional<std::int64_t> user,
                             const std::optional<std::string>& arg = std::nullopt);

/// Enforces Table.all() under the scenario's registry for an ad-hoc API name.
/// Throws Error for an unknown table.
Explanation explain_table(const Scenario& scenario, const std::string& table,
                          std::optional<std::int64_t> user);

}  // namespace ctxpol
