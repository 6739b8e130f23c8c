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

#include "iotmesh/monitor/monitor.hpp"

namespace iotmesh {

std::string_view to_string(HealthStatus status) noexcept {
  switch (status) {
    case HealthStatus::Up: return "up";
    case HealthStatus::Suspect: return "suspect";
    case HealthStatus::Down: return "down";
  }
  return "?";
}

std::string_view to_string(BreakerState state) noexcept {
  switch (state) {
    case BreakerState::Closed: return "closed";
    case BreakerState::Open: return "open";
    case BreakerState::HalfOpen: return "half_open";
  }
  return "?";
}

Value health_to_value(const HealthState& s) {
  Value::Map m{{"service_id", Value(s.service_id)},
               {"status", Value(std::string(to_string(s.status)))},
               {"consecutive_failures", Value(s.consecutive_failures)},
               {"breaker", Value(std::string(to_string(s.breaker)))},
               {"last_probe_ms", s.last_probe_ms ? Value(*s.last_probe_ms) : Value()},
               {"last_classification", s.last_classification
                                           ? Value(std::string(to_string(*s.last_classification)))
                                           : Value()}};
  if (s.breaker == BreakerState::Open) m.emplace("open_until_ms", Value(s.open_until_ms));
  return Value(std::move(m));
}

std::optional<ErrorKind> classify(const Symptoms& s, bool flapping) noexcept {
  std::optional<ErrorKind> kind;
  if (s.connection_refused || !s.probe_ok) {
    kind = ErrorKind::CrashFailure;
  } else if (s.request_timed_out) {
    kind = ErrorKind::OmissionFailure;
  } else if (s.deadline_exceeded) {
    kind = ErrorKind::TimingFault;
  }
  if (kind && flapping) kind = ErrorKind::TransientFault;
  return kind;
}

Monitor::Monitor(Scheduler& scheduler, Registry& registry, ServiceTransport& transport,
                 EventBus* bus, MonitorOptions options)
    : scheduler_(scheduler),
      registry_(registry),
      transport_(transport),
      bus_(bus),
      options_(options) {
  if (options_.probe_interval_ms <= 0 || options_.failure_threshold < 1 ||
      options_.cooldown_intervals < 1 || options_.flap_window_intervals < 1) {
    throw_error(ErrorKind::ContractViolation, "monitor parameters must be positive");
  }
}

Monitor::~Monitor() { stop(); }

void Monitor::start() {
  std::lock_guard lock(mu_);
  if (loop_) return;
  loop_ = std::make_unique<PeriodicTask>(scheduler_, options_.probe_interval_ms,
                                         [this] { probe_all(); });
}

void Monitor::stop() {
  std::unique_ptr<PeriodicTask> loop;
  {
    std::lock_guard lock(mu_);
    loop = std::move(loop_);
  }
  if (loop) loop->stop();
}

void Monitor::probe_all() {
  for (const RegistryEntry& e : registry_.live_entries()) {
    const ServiceDescriptor& d = e.descriptor;
    if (d.granularity == Granularity::Atomic && d.service_class == ServiceClass::Functional) {
      probe(d.service_id);
    }
  }
}

Monitor::Tracked& Monitor::tracked(const std::string& service_id) {
  auto [it, inserted] = states_.try_emplace(service_id);
  if (inserted) it->second.state.service_id = service_id;
  return it->second;
}

bool Monitor::flapping_locked(Tracked& t, TimeMs now) const {
  const TimeMs window = options_.probe_interval_ms * options_.flap_window_intervals;
  while (!t.flips.empty() && t.flips.front() <= now - window) t.flips.pop_front();
  return t.flips.size() >= 2;
}

void Monitor::note_outcome(Tracked& t, bool ok, TimeMs now) {
  if (t.last_probe_ok && *t.last_probe_ok != ok) t.flips.push_back(now);
  t.last_probe_ok = ok;
}

HealthState Monitor::probe(const std::string& service_id) {
  auto descriptor = registry_.last_known(service_id);
  if (!descriptor) throw_error(ErrorKind::NotFound, "unknown service " + service_id);
  const TimeMs now = scheduler_.now();
  {
    std::lock_guard lock(mu_);
    Tracked& t = tracked(service_id);
    t.state.last_probe_ms = now;
    if (t.state.breaker == BreakerState::Open) {
      if (now >= t.state.open_until_ms) t.state.breaker = BreakerState::HalfOpen;
      return t.state;
    }
  }

  const PingResult ping = transport_.ping(*descriptor);
  bool went_down = false;
  bool recovered = false;
  HealthState result;
  {
    std::lock_guard lock(mu_);
    Tracked& t = tracked(service_id);
    HealthState& s = t.state;
    note_outcome(t, ping.ok, now);
    if (ping.ok) {
      if (s.breaker == BreakerState::HalfOpen) {
        s.breaker = BreakerState::Closed;
        recovered = true;
      } else if (s.consecutive_failures > 0) {
        s.last_classification = ErrorKind::TransientFault;  // healed before the breaker tripped
      }
      s.consecutive_failures = 0;
      s.status = HealthStatus::Up;
    } else {
      ++s.consecutive_failures;
      Symptoms symptoms{.probe_ok = false, .connection_refused = ping.connection_refused};
      s.last_classification = classify(symptoms, flapping_locked(t, now));
      const TimeMs cooldown = options_.probe_interval_ms * options_.cooldown_intervals;
      if (s.breaker == BreakerState::HalfOpen) {
        s.breaker = BreakerState::Open;
        s.open_until_ms = now + cooldown;
        s.status = HealthStatus::Down;
      } else if (s.consecutive_failures >= options_.failure_threshold) {
        s.breaker = BreakerState::Open;
        s.open_until_ms = now + cooldown;
        s.status = HealthStatus::Down;
        went_down = true;
      } else {
        s.status = HealthStatus::Suspect;
      }
    }
    result = s;
  }

  if (recovered) {
    registry_.resume(service_id);
    publish("service.recovered", descriptor->capability,
            {{"service_id", Value(service_id)}, {"capability", Value(descriptor->capability.str())}});
  }
  if (went_down) on_down(service_id);
  return result;
}

std::optional<ErrorKind> Monitor::observe(const std::string& service_id, Symptoms symptoms) {
  auto descriptor = registry_.last_known(service_id);
  if (!descriptor) return classify(symptoms);
  const PingResult ping = transport_.ping(*descriptor);
  symptoms.probe_ok = ping.ok;
  symptoms.connection_refused = symptoms.connection_refused || ping.connection_refused;
  std::lock_guard lock(mu_);
  Tracked& t = tracked(service_id);
  auto kind = classify(symptoms, flapping_locked(t, scheduler_.now()));
  if (kind) t.state.last_classification = kind;
  return kind;
}

void Monitor::record_fault(const std::string& service_id, ErrorKind kind) {
  std::lock_guard lock(mu_);
  tracked(service_id).state.last_classification = kind;
}

FailoverAction Monitor::on_down(const std::string& service_id) {
  registry_.suspend(service_id);
  auto descriptor = registry_.last_known(service_id);
  FailoverAction action{.failed_service_id = service_id, .topic = "service.unavailable"};
  try {
    ServiceDescriptor replacement = registry_.resolve_equivalent(
        service_id, [this](const ServiceDescriptor& d) { return !admits(d.service_id); });
    action.replacement_service_id = replacement.service_id;
    action.topic = "service.redirect";
  } catch (const FrameworkError& e) {
    if (e.kind() != ErrorKind::NotFound) throw;
  }
  if (descriptor) {
    publish(action.topic, descriptor->capability,
            {{"failed", Value(service_id)},
             {"replacement",
              action.replacement_service_id ? Value(*action.replacement_service_id) : Value()},
             {"capability", Value(descriptor->capability.str())}});
  }
  return action;
}

void Monitor::publish(std::string_view topic, const Capability& capability, Value::Map body) {
  if (bus_ == nullptr) return;
  bus_->publish(topic, Message{.message_id = event_ids_.next(),
                               .capability = capability,
                               .timestamp_ms = scheduler_.now(),
                               .body = Value(std::move(body))});
}

std::optional<HealthState> Monitor::health(const std::string& service_id) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(service_id);
  if (it == states_.end()) return std::nullopt;
  return it->second.state;
}

std::vector<HealthState> Monitor::all() const {
  std::lock_guard lock(mu_);
  std::vector<HealthState> out;
  for (const auto& [id, t] : states_) out.push_back(t.state);
  return out;
}

std::optional<ErrorKind> Monitor::classification(const std::string& service_id) const {
  auto h = health(service_id);
  return h ? h->last_classification : std::nullopt;
}

bool Monitor::is_flapping(const std::string& service_id) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(service_id);
  if (it == states_.end()) return false;
  Tracked copy = it->second;
  return flapping_locked(copy, scheduler_.now());
}

bool Monitor::admits(const std::string& service_id) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(service_id);
  return it == states_.end() || it->second.state.breaker == BreakerState::Closed;
}

}  // namespace iotmesh
