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

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "iotmesh/gateway/gateway.hpp"

namespace iotmesh {

/// Every tunable of a running framework. Defaults match the documented
/// configuration file defaults.
struct FrameworkConfig {
  MonitorOptions monitor;
  Assembler::Options assembler;
  EventBus::Options bus;
  ServiceInvoker::Options invoker;
  Auditor::Options auditor;
  TimeMs default_deadline_ms = kDefaultDeadlineMs;
  bool monitor_enabled = true;
  std::map<std::string, std::string> tokens;  // token -> consumer id
};

/// Applies one dotted setting such as "monitor.failure_threshold". Throws
/// ContractViolation for unknown keys and out-of-range values.
void apply_setting(FrameworkConfig& config, std::string_view key, std::string_view value);

/// Names accepted by apply_setting, in documentation order.
const std::vector<std::string_view>& setting_keys();

/// Registry, bus, auditor, monitor, assembler and gateway wired together
/// over one scheduler and one transport to the devices.
class Framework {
 public:
  Framework(Scheduler& scheduler, ServiceTransport& transport, FrameworkConfig config = {});
  ~Framework();
  Framework(const Framework&) = delete;
  Framework& operator=(const Framework&) = delete;

  /// Starts the monitor loop and the renewal of promoted composites.
  void start();
  void stop();

  Scheduler& scheduler() noexcept { return scheduler_; }
  Registry& registry() noexcept { return registry_; }
  EventBus& bus() noexcept { return bus_; }
  Auditor& auditor() noexcept { return auditor_; }
  Monitor& monitor() noexcept { return monitor_; }
  ServiceInvoker& invoker() noexcept { return invoker_; }
  Assembler& assembler() noexcept { return assembler_; }
  Gateway& gateway() noexcept { return gateway_; }
  Authenticator& authenticator() noexcept { return auth_; }
  DeviceKeys& device_keys() noexcept { return device_keys_; }
  const FrameworkConfig& config() const noexcept { return config_; }

 private:
  Scheduler& scheduler_;
  FrameworkConfig config_;
  Registry registry_;
  EventBus bus_;
  Auditor auditor_;
  Authenticator auth_;
  DeviceKeys device_keys_;
  Monitor monitor_;
  ServiceInvoker invoker_;
  Assembler assembler_;
  Gateway gateway_;
  std::unique_ptr<PeriodicTask> renewals_;
};

}  // namespace iotmesh
