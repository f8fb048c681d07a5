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

// Seeded scenarios, their policy registries, and hand-inlined baseline
// handlers that serve as the correctness oracle for enforcement.
//
//   intranet       User/Payroll/EventCalendar/Invitee/Friends; friends see a
//                  colleague's neighborhood
//   intranet-dept  same data; the Transportation department sees neighborhoods
//   social         User/Follow/Post
//   wide           two tables of 100 data columns and one k-column pre-eval policy

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ctxpol/service.hpp"

namespace ctxpol {

enum class FixtureKind {
  Seeded,  // generated at `scale`
  Small,   // the hand-written worked-example rows
  Empty,   // schema only
};

struct ScenarioOptions {
  double scale = 1.0;
  std::uint64_t seed = 7;
  FixtureKind fixture = FixtureKind::Seeded;
  /// Columns named by the wide scenario's policy (1..100).
  std::size_t wide_columns = 100;
};

/// Inline-check handler: reads the store directly and applies the access
/// rules itself. Never calls the engine.
using BaselineHandler =
    std::function<nlohmann::ordered_json(const Params&, const UserContext&, const Database&)>;

struct Scenario {
  std::string name;
  Database db;
  PolicyRegistry registry;
  std::vector<Endpoint> endpoints;
  std::map<std::string, BaselineHandler> baseline;
};

std::vector<std::string> scenario_names();

/// Throws Error for an unknown name or a non-positive scale.
Scenario load_scenario(const std::string& name, const ScenarioOptions& options = {});

/// Row counts at a given scale.
struct SeedSizes {
  std::size_t users = 0;
  std::size_t events = 0;
  std::size_t social_users = 0;
  std::size_t posts = 0;
  std::size_t wide_rows = 0;
};
SeedSizes seed_sizes(double scale);

/// Registry with one policy removed and the rest re-indexed, sealed.
PolicyRegistry without_policy(const PolicyRegistry& registry, std::size_t index);

/// Backends that serve the baseline handlers against `db`.
std::map<std::string, Backend> baseline_backends(const Scenario& scenario);

/// "12 Elm St, Northside, Springfield" -> "Northside, Springfield".
std::string neighborhood_of(std::string_view address);
/// "12 Elm St, Northside, Springfield" -> "Springfield".
std::string city_of(std::string_view address);

/// Data column names c1..c100 of the wide tables.
std::string wide_column(std::size_t i);
/// Registry holding the single k-column policy on WideA.
PolicyRegistry wide_registry(std::size_t columns);
/// The application query issued by the wide endpoint.
Query wide_query();
/// The same restriction written inline.
Query wide_inline_query(std::size_t columns);

/// One concrete request per (endpoint, user), users sampled deterministically;
/// anonymous is always included. Endpoints with path parameters get values
/// drawn from the data.
std::vector<Request> sample_requests(const Scenario& scenario, std::size_t users,
                                     std::uint64_t seed);

struct Mismatch {
  std::string api;
  std::string path;
  std::string user;
  int enforced_status = 0;
  int baseline_status = 0;
  std::string enforced;
  std::string baseline;
};

struct EquivalenceReport {
  std::string scenario;
  std::size_t requests = 0;
  std::vector<Mismatch> mismatches;
  std::map<std::string, std::size_t> per_api;
  /// Requests answered with a 5xx by either side. Matching failures are not
  /// evidence of equivalence.
  std::size_t server_errors = 0;

  bool ok() const noexcept { return mismatches.empty() && server_errors == 0; }
  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

/// Replays `requests` against the enforced service and the baseline service
/// and compares status and body byte for byte. `registry` defaults to the
/// scenario's own.
EquivalenceReport equivalence_report(const Scenario& scenario, const std::vector<Request>& requests,
                                     const PolicyRegistry* registry = nullptr);

}  // namespace ctxpol
