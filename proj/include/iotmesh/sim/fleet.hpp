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

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iotmesh/bus/event_bus.hpp"
#include "iotmesh/core/auth.hpp"
#include "iotmesh/core/json_io.hpp"
#include "iotmesh/core/transport.hpp"
#include "iotmesh/registry/registry.hpp"

namespace iotmesh {

enum class WireKind { PubSub, Request };

std::string_view to_string(WireKind wire) noexcept;
std::optional<WireKind> parse_wire_kind(std::string_view text) noexcept;

/// Output generator of a simulated capability. Every kind is a pure
/// function of (reading index, time), so a run is reproducible.
struct Generator {
  enum class Kind { Constant, Ramp, SeededRandom };

  Kind kind = Kind::Constant;
  /// Constant: the body itself when it is a map, otherwise {field: value}.
  Value value;
  /// Body field written by ramp and seeded-random generators.
  std::string field = "value";
  /// Ramp: start + step * reading index.
  double start = 0;
  double step = 1;
  /// Seeded-random: integers drawn uniformly from [min, max].
  std::int64_t min = 0;
  std::int64_t max = 100;
  std::uint64_t seed = 0;
};

Generator generator_from_json(const Json& json);
Json generator_to_json(const Generator& generator);

/// Output schema implied by a generator.
Schema generator_schema(const Generator& generator);

struct DeviceCapability {
  Capability capability;
  TimeMs processing_delay_ms = 0;
  Generator generator;
  WireFormat format = WireFormat::Json;
  ServiceClass service_class = ServiceClass::Functional;
  Schema input_schema;
};

struct Telemetry {
  std::string topic;
  TimeMs period_ms = 1000;
};

struct DeviceProfile {
  std::string device_id;
  std::string domain = "default";
  WireKind wire = WireKind::Request;
  std::vector<DeviceCapability> capabilities;
  TimeMs lease_ttl_ms = kDefaultLeaseTtlMs;
  /// Empty means "dev-token-<device_id>".
  std::string token;
  std::optional<Telemetry> telemetry;
};

/// Throws ContractViolation: empty id, no capabilities, negative delay,
/// duplicate capability, bad lease or telemetry settings.
void check_profile(const DeviceProfile& profile);
DeviceProfile profile_from_json(const Json& json, std::uint64_t run_seed = 0);

struct FaultSpec {
  enum class Kind { Crash, Omission, Timing, Unauthorised, Transient };

  std::string target;
  Kind kind = Kind::Crash;
  TimeMs start_ms = 0;
  TimeMs duration_ms = 1;
  TimeMs extra_delay_ms = 0;   // Timing
  TimeMs flap_period_ms = 0;   // Transient: down during odd periods
};

std::string_view to_string(FaultSpec::Kind kind) noexcept;
void check_fault(const FaultSpec& fault);
FaultSpec fault_from_json(const Json& json);

/// Simulated device fleet. Each device registers one service per
/// capability (service id "<device>/<capability>"), renews its leases at a
/// third of the ttl, answers requests after its processing delay, and
/// publishes telemetry. The fleet is also the framework's transport to those
/// services, which is where injected faults take effect.
class Fleet final : public ServiceTransport {
 public:
  explicit Fleet(Scheduler& scheduler);
  ~Fleet() override;
  Fleet(const Fleet&) = delete;
  Fleet& operator=(const Fleet&) = delete;

  /// Connects the fleet to a framework. Devices spawned afterwards
  /// register, publish and install their tokens there.
  void attach(Registry& registry, EventBus* bus, DeviceKeys* keys);

  /// Throws ContractViolation for an invalid profile or a duplicate id.
  void spawn_device(DeviceProfile profile);
  /// Faults take effect at start_ms (now if already past) and heal after
  /// duration_ms. Throws NotFound for an unknown target.
  void inject_fault(FaultSpec fault);

  void call(const ServiceDescriptor& target, EncodedMessage request,
            ReplyHandler on_reply) override;
  PingResult ping(const ServiceDescriptor& target) override;

  static std::string service_id(const std::string& device_id, const Capability& capability);
  std::vector<std::string> device_ids() const;
  std::size_t size() const;
  /// Requests that reached the device (refused connections are not counted).
  std::uint64_t requests_received(const std::string& device_id) const;
  std::optional<FaultSpec::Kind> active_fault(const std::string& device_id) const;

 private:
  struct Device;

  enum class Condition { Healthy, Refusing, Silent, Slow, Tokenless };
  Condition condition_locked(const Device& device, TimeMs now, TimeMs* extra) const;
  void register_all(Device& device);
  void heartbeat(const std::string& device_id);
  void publish_telemetry(const std::string& device_id);
  Value next_output(Device& device, const DeviceCapability& capability, TimeMs now);

  Scheduler& scheduler_;
  Registry* registry_ = nullptr;
  EventBus* bus_ = nullptr;
  DeviceKeys* keys_ = nullptr;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Device>> devices_;
};

}  // namespace iotmesh
