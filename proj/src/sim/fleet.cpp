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

#include "iotmesh/sim/fleet.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "iotmesh/codec/codec.hpp"

namespace iotmesh {

namespace {

[[noreturn]] void bad(std::string detail) {
  throw_error(ErrorKind::ContractViolation, std::move(detail));
}

// FNV-1a, so seeds do not depend on the standard library's hash.
std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool integral(double d) {
  return std::floor(d) == d && std::fabs(d) < 9007199254740992.0;
}

std::string padded(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(n));
  return buf;
}

}  // namespace

std::string_view to_string(WireKind wire) noexcept {
  return wire == WireKind::PubSub ? "pubsub" : "request";
}

std::optional<WireKind> parse_wire_kind(std::string_view text) noexcept {
  if (text == "pubsub") return WireKind::PubSub;
  if (text == "request") return WireKind::Request;
  return std::nullopt;
}

std::string_view to_string(FaultSpec::Kind kind) noexcept {
  switch (kind) {
    case FaultSpec::Kind::Crash: return "crash";
    case FaultSpec::Kind::Omission: return "omission";
    case FaultSpec::Kind::Timing: return "timing";
    case FaultSpec::Kind::Unauthorised: return "unauthorised";
    case FaultSpec::Kind::Transient: return "transient";
  }
  return "crash";
}

Generator generator_from_json(const Json& json) {
  if (!json.is_object()) bad("generator must be an object");
  Generator g;
  const std::string kind = json_field::string(json, "kind");
  if (kind == "constant") {
    json_field::reject_unknown(json, {"kind", "value", "field"}, "constant generator");
    g.kind = Generator::Kind::Constant;
    g.value = value_from_json(json_field::require(json, "value"));
    g.field = json_field::string_or(json, "field", "value");
  } else if (kind == "ramp") {
    json_field::reject_unknown(json, {"kind", "field", "start", "step"}, "ramp generator");
    g.kind = Generator::Kind::Ramp;
    g.field = json_field::string_or(json, "field", "value");
    if (json.contains("start")) {
      if (!json["start"].is_number()) bad("ramp start must be a number");
      g.start = json["start"].get<double>();
    }
    if (json.contains("step")) {
      if (!json["step"].is_number()) bad("ramp step must be a number");
      g.step = json["step"].get<double>();
    }
  } else if (kind == "random") {
    json_field::reject_unknown(json, {"kind", "field", "min", "max", "seed"}, "random generator");
    g.kind = Generator::Kind::SeededRandom;
    g.field = json_field::string_or(json, "field", "value");
    g.min = json_field::integer_or(json, "min", 0);
    g.max = json_field::integer_or(json, "max", 100);
    g.seed = static_cast<std::uint64_t>(json_field::integer_or(json, "seed", 0));
    if (g.min > g.max) bad("random generator needs min <= max");
  } else {
    bad("unknown generator kind '" + kind + "'");
  }
  if (g.field.empty()) bad("generator field must not be empty");
  return g;
}

Json generator_to_json(const Generator& g) {
  switch (g.kind) {
    case Generator::Kind::Constant:
      return Json{{"kind", "constant"}, {"value", value_to_json(g.value)}, {"field", g.field}};
    case Generator::Kind::Ramp:
      return Json{{"kind", "ramp"}, {"field", g.field}, {"start", g.start}, {"step", g.step}};
    case Generator::Kind::SeededRandom:
      return Json{{"kind", "random"}, {"field", g.field}, {"min", g.min}, {"max", g.max},
                  {"seed", g.seed}};
  }
  return Json();
}

Schema generator_schema(const Generator& g) {
  switch (g.kind) {
    case Generator::Kind::Constant: {
      if (g.value.is_map()) {
        std::vector<FieldSpec> fields;
        for (const auto& [k, v] : g.value.as_map()) fields.push_back({k, v.kind(), true});
        return Schema(std::move(fields));
      }
      return Schema({{g.field, g.value.kind(), true}});
    }
    case Generator::Kind::Ramp:
      return Schema({{g.field, integral(g.start) && integral(g.step) ? ValueKind::Int
                                                                       : ValueKind::Float,
                      true}});
    case Generator::Kind::SeededRandom:
      return Schema({{g.field, ValueKind::Int, true}});
  }
  return Schema();
}

void check_profile(const DeviceProfile& p) {
  if (p.device_id.empty()) bad("device id must not be empty");
  if (p.device_id.find('/') != std::string::npos) bad("device id must not contain '/'");
  if (p.domain.empty()) bad("device " + p.device_id + " needs a domain");
  if (p.capabilities.empty()) bad("device " + p.device_id + " has no capabilities");
  if (p.lease_ttl_ms < 3) bad("device " + p.device_id + " lease ttl must be at least 3ms");
  std::set<Capability> seen;
  for (const auto& c : p.capabilities) {
    if (c.processing_delay_ms < 0) {
      bad("device " + p.device_id + " has a negative processing delay");
    }
    if (!seen.insert(c.capability).second) {
      bad("device " + p.device_id + " lists " + c.capability.str() + " twice");
    }
  }
  if (p.telemetry) {
    const auto& t = p.telemetry->topic;
    if (!TopicPattern::is_valid(t) || t.find_first_of("+#") != std::string::npos) {
      bad("device " + p.device_id + " telemetry topic '" + t + "' is not a concrete topic");
    }
    if (p.telemetry->period_ms <= 0) bad("telemetry period must be positive");
  }
}

DeviceProfile profile_from_json(const Json& json, std::uint64_t run_seed) {
  if (!json.is_object()) bad("device must be an object");
  json_field::reject_unknown(
      json, {"id", "domain", "wire", "capabilities", "lease_ttl_ms", "token", "telemetry"},
      "device");
  DeviceProfile p;
  p.device_id = json_field::string(json, "id");
  p.domain = json_field::string_or(json, "domain", "default");
  const std::string wire = json_field::string_or(json, "wire", "request");
  auto w = parse_wire_kind(wire);
  if (!w) bad("unknown wire '" + wire + "'");
  p.wire = *w;
  p.lease_ttl_ms = json_field::integer_or(json, "lease_ttl_ms", kDefaultLeaseTtlMs);
  p.token = json_field::string_or(json, "token", "");
  const Json& caps = json_field::require(json, "capabilities");
  if (!caps.is_array()) bad("device capabilities must be an array");
  for (const auto& c : caps) {
    json_field::reject_unknown(
        c, {"capability", "delay_ms", "format", "class", "input_schema", "generator"},
        "device capability");
    DeviceCapability dc{.capability = Capability::parse(json_field::string(c, "capability"))};
    dc.processing_delay_ms = json_field::integer_or(c, "delay_ms", 0);
    const std::string fmt = json_field::string_or(c, "format", "json");
    auto f = parse_wire_format(fmt);
    if (!f) bad("unknown format '" + fmt + "'");
    dc.format = *f;
    const std::string cls = json_field::string_or(c, "class", "functional");
    auto sc = parse_service_class(cls);
    if (!sc) bad("unknown service class '" + cls + "'");
    dc.service_class = *sc;
    dc.input_schema = schema_from_json(c.value("input_schema", Json()));
    if (c.contains("generator")) {
      dc.generator = generator_from_json(c["generator"]);
    } else {
      dc.generator.value = Value(Value::Map{{"ok", Value(true)}});
    }
    if (dc.generator.kind == Generator::Kind::SeededRandom) {
      dc.generator.seed ^= run_seed * 0x9e3779b97f4a7c15ull;
    }
    p.capabilities.push_back(std::move(dc));
  }
  if (json.contains("telemetry")) {
    const Json& t = json["telemetry"];
    json_field::reject_unknown(t, {"topic", "period_ms"}, "telemetry");
    p.telemetry = Telemetry{json_field::string(t, "topic"),
                            json_field::integer_or(t, "period_ms", 1000)};
  }
  check_profile(p);
  return p;
}

void check_fault(const FaultSpec& f) {
  if (f.target.empty()) bad("fault needs a target device");
  if (f.duration_ms <= 0) bad("fault duration must be positive");
  if (f.start_ms < 0) bad("fault start must not be negative");
  if (f.kind == FaultSpec::Kind::Timing && f.extra_delay_ms <= 0) {
    bad("timing fault needs a positive extra delay");
  }
  if (f.kind == FaultSpec::Kind::Transient && f.flap_period_ms <= 0) {
    bad("transient fault needs a positive flap period");
  }
}

FaultSpec fault_from_json(const Json& json) {
  if (!json.is_object()) bad("fault must be an object");
  json_field::reject_unknown(
      json, {"target", "kind", "start_ms", "duration_ms", "extra_delay_ms", "flap_period_ms"},
      "fault");
  FaultSpec f;
  f.target = json_field::string(json, "target");
  const std::string kind = json_field::string(json, "kind");
  static const std::map<std::string, FaultSpec::Kind, std::less<>> kinds = {
      {"crash", FaultSpec::Kind::Crash},
      {"omission", FaultSpec::Kind::Omission},
      {"timing", FaultSpec::Kind::Timing},
      {"unauthorised", FaultSpec::Kind::Unauthorised},
      {"transient", FaultSpec::Kind::Transient},
  };
  auto it = kinds.find(kind);
  if (it == kinds.end()) bad("unknown fault kind '" + kind + "'");
  f.kind = it->second;
  f.start_ms = json_field::integer_or(json, "start_ms", 0);
  f.duration_ms = json_field::integer(json, "duration_ms");
  f.extra_delay_ms = json_field::integer_or(json, "extra_delay_ms", 0);
  f.flap_period_ms = json_field::integer_or(json, "flap_period_ms", 0);
  check_fault(f);
  return f;
}

struct Fleet::Device {
  DeviceProfile profile;
  std::vector<std::mt19937_64> rngs;
  std::vector<std::uint64_t> readings;
  std::vector<FaultSpec> faults;
  std::map<std::string, Lease> leases;
  std::uint64_t received = 0;
  std::uint64_t replies = 0;
  std::unique_ptr<PeriodicTask> heartbeat;
  std::unique_ptr<PeriodicTask> telemetry;
};

Fleet::Fleet(Scheduler& scheduler) : scheduler_(scheduler) {}

Fleet::~Fleet() {
  std::map<std::string, std::unique_ptr<Device>> devices;
  {
    std::lock_guard lock(mu_);
    devices.swap(devices_);
  }
  // Stop the periodic tasks without holding mu_: a running tick may need it.
  for (auto& [id, d] : devices) {
    if (d->heartbeat) d->heartbeat->stop();
    if (d->telemetry) d->telemetry->stop();
  }
}

void Fleet::attach(Registry& registry, EventBus* bus, DeviceKeys* keys) {
  std::lock_guard lock(mu_);
  registry_ = &registry;
  bus_ = bus;
  keys_ = keys;
}

std::string Fleet::service_id(const std::string& device_id, const Capability& capability) {
  return device_id + "/" + capability.str();
}

void Fleet::spawn_device(DeviceProfile profile) {
  check_profile(profile);
  if (profile.token.empty()) profile.token = "dev-token-" + profile.device_id;
  auto device = std::make_unique<Device>();
  for (const auto& c : profile.capabilities) {
    device->rngs.emplace_back(c.generator.seed ^
                              stable_hash(service_id(profile.device_id, c.capability)));
    device->readings.push_back(0);
  }
  device->profile = std::move(profile);
  const std::string id = device->profile.device_id;
  Device* raw = device.get();
  {
    std::lock_guard lock(mu_);
    if (devices_.count(id)) bad("device " + id + " already exists");
    devices_.emplace(id, std::move(device));
    if (keys_) keys_->set(id, raw->profile.token);
  }
  register_all(*raw);
  const TimeMs ttl = raw->profile.lease_ttl_ms;
  auto hb = std::make_unique<PeriodicTask>(scheduler_, ttl / 3, [this, id] { heartbeat(id); });
  std::unique_ptr<PeriodicTask> tm;
  if (raw->profile.telemetry) {
    tm = std::make_unique<PeriodicTask>(scheduler_, raw->profile.telemetry->period_ms,
                                        [this, id] { publish_telemetry(id); });
  }
  std::lock_guard lock(mu_);
  raw->heartbeat = std::move(hb);
  raw->telemetry = std::move(tm);
}

void Fleet::register_all(Device& device) {
  Registry* registry;
  std::vector<ServiceDescriptor> descriptors;
  {
    std::lock_guard lock(mu_);
    registry = registry_;
    if (!registry) return;
    for (const auto& c : device.profile.capabilities) {
      descriptors.push_back(ServiceDescriptor{
          .service_id = service_id(device.profile.device_id, c.capability),
          .capability = c.capability,
          .service_class = c.service_class,
          .device_id = device.profile.device_id,
          .domain = device.profile.domain,
          .input_schema = c.input_schema,
          .output_schema = generator_schema(c.generator),
          .preferred_format = c.format,
          .granularity = Granularity::Atomic,
          .cost_hint_ms = c.processing_delay_ms,
          .lease_ttl_ms = device.profile.lease_ttl_ms,
      });
    }
  }
  std::map<std::string, Lease> leases;
  for (auto& d : descriptors) {
    std::string sid = d.service_id;
    leases.insert_or_assign(sid, registry->register_service(std::move(d)));
  }
  std::lock_guard lock(mu_);
  device.leases = std::move(leases);
}

void Fleet::heartbeat(const std::string& device_id) {
  Registry* registry;
  std::map<std::string, Lease> leases;
  std::vector<ServiceDescriptor> descriptors;
  {
    std::lock_guard lock(mu_);
    auto it = devices_.find(device_id);
    if (it == devices_.end() || !registry_) return;
    // A crashed device cannot renew anything.
    if (condition_locked(*it->second, scheduler_.now(), nullptr) == Condition::Refusing) return;
    registry = registry_;
    leases = it->second->leases;
  }
  for (auto& [sid, lease] : leases) {
    try {
      lease = registry->renew(lease);
    } catch (const FrameworkError& e) {
      if (e.kind() != ErrorKind::NotFound) throw;
      auto last = registry->last_known(sid);
      if (!last) continue;
      lease = registry->register_service(*last);
    }
  }
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it != devices_.end()) it->second->leases = std::move(leases);
}

void Fleet::publish_telemetry(const std::string& device_id) {
  EventBus* bus;
  std::optional<Message> msg;
  std::string topic;
  {
    std::lock_guard lock(mu_);
    auto it = devices_.find(device_id);
    if (it == devices_.end() || !bus_) return;
    Device& d = *it->second;
    const TimeMs now = scheduler_.now();
    const Condition cond = condition_locked(d, now, nullptr);
    if (cond == Condition::Refusing || cond == Condition::Silent) return;
    const auto& cap = d.profile.capabilities.front();
    msg.emplace(Message{
        .message_id = device_id + "-t" + padded(++d.replies),
        .correlation_id = std::nullopt,
        .capability = cap.capability,
        .timestamp_ms = now,
        .headers = {},
        .body = next_output(d, cap, now),
    });
    topic = d.profile.telemetry->topic;
    bus = bus_;
  }
  bus->publish(topic, std::move(*msg));
}

Value Fleet::next_output(Device& device, const DeviceCapability& capability, TimeMs) {
  std::size_t index = 0;
  while (device.profile.capabilities[index].capability != capability.capability) ++index;
  const std::uint64_t n = device.readings[index]++;
  const Generator& g = capability.generator;
  switch (g.kind) {
    case Generator::Kind::Constant:
      if (g.value.is_map()) return g.value;
      return Value(Value::Map{{g.field, g.value}});
    case Generator::Kind::Ramp: {
      const double v = g.start + g.step * static_cast<double>(n);
      if (integral(g.start) && integral(g.step)) {
        return Value(Value::Map{{g.field, Value(static_cast<std::int64_t>(v))}});
      }
      return Value(Value::Map{{g.field, Value(v)}});
    }
    case Generator::Kind::SeededRandom: {
      // Modulo reduction rather than std::uniform_int_distribution, whose
      // output differs between standard library implementations.
      const auto span = static_cast<std::uint64_t>(g.max - g.min) + 1;
      const std::uint64_t r = device.rngs[index]();
      const std::uint64_t offset = span == 0 ? r : r % span;
      return Value(Value::Map{{g.field, Value(g.min + static_cast<std::int64_t>(offset))}});
    }
  }
  return Value();
}

Fleet::Condition Fleet::condition_locked(const Device& device, TimeMs now, TimeMs* extra) const {
  for (const auto& f : device.faults) {
    if (now < f.start_ms || now >= f.start_ms + f.duration_ms) continue;
    switch (f.kind) {
      case FaultSpec::Kind::Crash: return Condition::Refusing;
      case FaultSpec::Kind::Omission: return Condition::Silent;
      case FaultSpec::Kind::Timing:
        if (extra) *extra = f.extra_delay_ms;
        return Condition::Slow;
      case FaultSpec::Kind::Unauthorised: return Condition::Tokenless;
      case FaultSpec::Kind::Transient:
        // Down for the first flap period, up for the next, and so on.
        if (((now - f.start_ms) / f.flap_period_ms) % 2 == 0) return Condition::Refusing;
        continue;
    }
  }
  return Condition::Healthy;
}

void Fleet::inject_fault(FaultSpec fault) {
  check_fault(fault);
  const TimeMs now = scheduler_.now();
  if (fault.start_ms < now) fault.start_ms = now;
  const TimeMs heal_at = fault.start_ms + fault.duration_ms;
  std::string target = fault.target;
  {
    std::lock_guard lock(mu_);
    auto it = devices_.find(target);
    if (it == devices_.end()) {
      throw_error(ErrorKind::NotFound, "no device " + target + " to inject a fault into");
    }
    it->second->faults.push_back(std::move(fault));
  }
  // Renew (or re-register) as soon as the fault heals instead of waiting for
  // the next heartbeat tick.
  scheduler_.schedule_at(heal_at, [this, target] { heartbeat(target); });
}

void Fleet::call(const ServiceDescriptor& target, EncodedMessage request,
                 ReplyHandler on_reply) {
  const TimeMs now = scheduler_.now();
  TimeMs extra = 0;
  Condition cond;
  TimeMs delay = 0;
  std::string reply_id;
  std::string token;
  {
    std::lock_guard lock(mu_);
    auto it = devices_.find(target.device_id);
    if (it == devices_.end()) {
      cond = Condition::Refusing;
    } else {
      Device& d = *it->second;
      cond = condition_locked(d, now, &extra);
      if (cond != Condition::Refusing) {
        ++d.received;
        reply_id = target.device_id + "-" + padded(++d.replies);
        token = d.profile.token;
      }
    }
  }
  if (cond == Condition::Refusing) {
    on_reply(FrameworkError(ErrorKind::CrashFailure,
                            "connection to " + target.service_id + " refused"));
    return;
  }
  if (cond == Condition::Silent) return;

  std::optional<Message> in;
  try {
    in.emplace(codec::decode(request));
  } catch (const FrameworkError& e) {
    on_reply(e);
    return;
  }

  Value body;
  {
    std::lock_guard lock(mu_);
    auto it = devices_.find(target.device_id);
    if (it == devices_.end()) return;
    Device& d = *it->second;
    const DeviceCapability* cap = nullptr;
    for (const auto& c : d.profile.capabilities) {
      if (c.capability == target.capability) cap = &c;
    }
    if (!cap) {
      on_reply(FrameworkError(ErrorKind::NotFound, target.device_id + " does not serve " +
                                                       target.capability.str()));
      return;
    }
    delay = cap->processing_delay_ms + (cond == Condition::Slow ? extra : 0);
    body = next_output(d, *cap, now);
  }

  Message reply{
      .message_id = reply_id,
      .correlation_id = in->message_id,
      .capability = target.capability,
      .timestamp_ms = now + delay,
      .headers = {},
      .body = std::move(body),
  };
  if (cond != Condition::Tokenless) reply.headers[std::string(DeviceKeys::kHeader)] = token;
  EncodedMessage out = codec::encode(reply, request.format);
  scheduler_.schedule_after(delay, [out = std::move(out), on_reply = std::move(on_reply)] {
    on_reply(out);
  });
}

PingResult Fleet::ping(const ServiceDescriptor& target) {
  std::lock_guard lock(mu_);
  auto it = devices_.find(target.device_id);
  if (it == devices_.end()) return {false, true};
  if (condition_locked(*it->second, scheduler_.now(), nullptr) == Condition::Refusing) {
    return {false, true};
  }
  return {true, false};
}

std::vector<std::string> Fleet::device_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, d] : devices_) out.push_back(id);
  return out;
}

std::size_t Fleet::size() const {
  std::lock_guard lock(mu_);
  return devices_.size();
}

std::uint64_t Fleet::requests_received(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  return it == devices_.end() ? 0 : it->second->received;
}

std::optional<FaultSpec::Kind> Fleet::active_fault(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return std::nullopt;
  const TimeMs now = scheduler_.now();
  for (const auto& f : it->second->faults) {
    if (now >= f.start_ms && now < f.start_ms + f.duration_ms) return f.kind;
  }
  return std::nullopt;
}

}  // namespace iotmesh
