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

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iotmesh/bus/event_bus.hpp"
#include "iotmesh/core/error.hpp"
#include "iotmesh/core/scheduler.hpp"
#include "iotmesh/core/transport.hpp"
#include "iotmesh/registry/registry.hpp"

namespace iotmesh {

enum class HealthStatus { Up, Suspect, Down };
enum class BreakerState { Closed, Open, HalfOpen };

std::string_view to_string(HealthStatus status) noexcept;
std::string_view to_string(BreakerState state) noexcept;

struct HealthState {
  std::string service_id;
  HealthStatus status = HealthStatus::Up;
  int consecutive_failures = 0;
  BreakerState breaker = BreakerState::Closed;
  TimeMs open_until_ms = 0;  // meaningful while Open
  std::optional<TimeMs> last_probe_ms;
  std::optional<ErrorKind> last_classification;

  friend bool operator==(const HealthState&, const HealthState&) = default;
};

Value health_to_value(const HealthState& state);

struct Symptoms {
  bool probe_ok = true;
  bool request_timed_out = false;
  bool connection_refused = false;
  bool deadline_exceeded = false;
};

/// Total mapping from observed symptoms to a fault kind, checked in order:
///   connection refused        -> CrashFailure
///   probe failed              -> CrashFailure
///   request never answered    -> OmissionFailure
///   answer after the deadline -> TimingFault
///   nothing wrong             -> nullopt
/// `flapping` turns any fault into TransientFault. A refused connection with
/// a successful probe cannot be observed together; the refusal wins.
std::optional<ErrorKind> classify(const Symptoms& symptoms, bool flapping = false) noexcept;

struct MonitorOptions {
  TimeMs probe_interval_ms = 1000;
  int failure_threshold = 3;
  int cooldown_intervals = 5;
  int flap_window_intervals = 10;
};

struct FailoverAction {
  std::string failed_service_id;
  std::optional<std::string> replacement_service_id;
  std::string topic;  // "service.redirect" or "service.unavailable"
};

/// Health prober and circuit breaker for atomic providers.
///
/// Breaker walk: Closed -> Open after `failure_threshold` consecutive failed
/// probes; Open -> HalfOpen at the first probe once the cooldown has passed;
/// the next probe is the single trial, HalfOpen -> Closed on success and
/// HalfOpen -> Open on failure. While a breaker is not Closed the service is
/// suspended in the registry, so no request is routed to it.
class Monitor {
 public:
  Monitor(Scheduler& scheduler, Registry& registry, ServiceTransport& transport,
          EventBus* bus = nullptr, MonitorOptions options = {});
  ~Monitor();
  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  /// Probes every live atomic functional service each interval.
  void start();
  void stop();
  void probe_all();

  /// Throws NotFound when `service_id` was never registered.
  HealthState probe(const std::string& service_id);

  /// Request-path evidence. Pings the provider to complete the symptom
  /// tuple and records the resulting classification.
  std::optional<ErrorKind> observe(const std::string& service_id, Symptoms symptoms);
  /// Records a fault the caller classified itself (UnauthorisedAccess).
  void record_fault(const std::string& service_id, ErrorKind kind);

  FailoverAction on_down(const std::string& service_id);

  std::optional<HealthState> health(const std::string& service_id) const;
  std::vector<HealthState> all() const;
  std::optional<ErrorKind> classification(const std::string& service_id) const;
  bool is_flapping(const std::string& service_id) const;
  bool admits(const std::string& service_id) const;
  const MonitorOptions& options() const noexcept { return options_; }

 private:
  struct Tracked {
    HealthState state;
    std::optional<bool> last_probe_ok;
    std::deque<TimeMs> flips;  // times at which the probe outcome changed
  };

  Tracked& tracked(const std::string& service_id);
  bool flapping_locked(Tracked& t, TimeMs now) const;
  void note_outcome(Tracked& t, bool ok, TimeMs now);
  void publish(std::string_view topic, const Capability& capability, Value::Map body);

  Scheduler& scheduler_;
  Registry& registry_;
  ServiceTransport& transport_;
  EventBus* bus_;
  const MonitorOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, Tracked> states_;
  IdGenerator event_ids_{"mon-"};
  std::unique_ptr<PeriodicTask> loop_;
};

}  // namespace iotmesh
