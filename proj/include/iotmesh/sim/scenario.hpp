// Copyright 2026 The iotmesh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iotmesh/runtime/framework.hpp"
#include "iotmesh/sim/fleet.hpp"

namespace iotmesh {

/// One consumer request, or `repeat` copies spaced `every_ms` apart.
struct WorkloadItem {
  TimeMs at_ms = 0;
  std::string label;
  Capability capability;
  std::string token;
  std::string consumer_id;
  WireFormat format = WireFormat::Json;
  WireFormat accept = WireFormat::Json;
  TimeMs deadline_ms = kDefaultDeadlineMs;
  Value body = Value(Value::Map{});
  int repeat = 1;
  TimeMs every_ms = 0;
};

struct TimedSplit {
  TimeMs at_ms = 0;
  SplitMapping mapping;
};

struct Scenario {
  std::string name;
  bool virtual_clock = true;
  std::uint64_t seed = 0;
  FrameworkConfig config;
  std::vector<DeviceProfile> devices;
  std::vector<FaultSpec> faults;
  std::vector<CompositeSpec> composites;
  std::vector<TimedSplit> splits;
  std::vector<WorkloadItem> workload;
  std::vector<Json> assertions;
  std::optional<TimeMs> run_until_ms;
};

/// Parses a scenario document. `seed_override` replaces clock.seed before
/// any seeded generator is built. Throws ContractViolation naming the
/// offending key.
Scenario parse_scenario(const Json& document, std::optional<std::uint64_t> seed_override = {});
Scenario load_scenario(const std::filesystem::path& path,
                       std::optional<std::uint64_t> seed_override = {});

struct ScenarioReport {
  Json document;
  std::size_t assertions_failed = 0;

  /// Stable rendering: sorted keys, two-space indent, trailing newline.
  std::string render() const;
};

/// Runs the scenario against a fresh framework and fleet. Under the
/// virtual clock the report depends only on the scenario and its seed.
ScenarioReport run_scenario(const Scenario& scenario);

}  // namespace iotmesh
