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

#include "iotmesh/adapters/binding.hpp"
#include "iotmesh/runtime/framework.hpp"

namespace iotmesh {

/// Settings of a `serve` process.
struct CliConfig {
  std::filesystem::path path;
  Endpoint http{"127.0.0.1", 8080};
  Endpoint pubsub{"127.0.0.1", 7070};
  /// trace, debug, info, warn, error or off.
  std::string log_level = "info";
  /// Scenario file whose devices, composites and splits populate the
  /// simulated fleet. Relative paths resolve against the config file.
  std::optional<std::filesystem::path> fleet_scenario;
  FrameworkConfig framework;
};

/// Parses the key/value configuration text:
///
///   # comment
///   [http]
///   port = 8080
///   [tokens]
///   tok-dash = "dashboard"
///   monitor.failure_threshold = 3
///
/// Keys are "section.key"; a key may carry its own dots before any section
/// header. Values are integers, true/false, or double-quoted strings.
/// Unknown or repeated keys throw ContractViolation with "<origin>:<line>:".
CliConfig parse_config(std::string_view text, std::string_view origin = "config");
CliConfig load_config(const std::filesystem::path& path);

/// Every key the file format accepts outside [tokens], in documentation order.
std::vector<std::string> config_keys();

}  // namespace iotmesh
