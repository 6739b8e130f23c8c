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

#include <gtest/gtest.h>

#include <set>

#include "iotmesh/codec/codec.hpp"
#include "iotmesh/sim/scenario.hpp"

namespace iotmesh {
namespace {

Capability cap(std::string_view s) { return Capability::parse(s); }

DeviceProfile sensor(std::string id, std::string capability, TimeMs delay = 200) {
  DeviceProfile p;
  p.device_id = std::move(id);
  p.capabilities.push_back(DeviceCapability{.capability = cap(capability),
                                            .processing_delay_ms = delay});
  p.capabilities.back().generator.value = Value(Value::Map{{"temp_c", Value(21)}});
  return p;
}

struct Rig {
  VirtualScheduler clock;
  Registry registry{clock};
  EventBus bus{clock};
  DeviceKeys keys;
  Fleet fleet{clock};
  Rig() { fleet.attach(registry, &bus, &keys); }

  ServiceDescriptor descriptor(const std::string& device, const std::string& capability) {
    return *registry.last_known(Fleet::service_id(device, cap(capability)));
  }

  EncodedMessage request(const std::string& capability) {
    return codec::encode(Message{.message_id = "req-1",
                                 .correlation_id = std::nullopt,
                                 .capability = cap(capability),
                                 .timestamp_ms = clock.now(),
                                 .headers = {},
                                 .body = Value(Value::Map{})},
                         WireFormat::Json);
  }

  // Calls the device and runs the clock far enough for any reply.
  std::optional<Result<EncodedMessage>> call(const std::string& device,
                                             const std::string& capability,
                                             TimeMs* replied_at = nullptr) {
    std::optional<Result<EncodedMessage>> got;
    fleet.call(descriptor(device, capability), request(capability),
               [&](Result<EncodedMessage> r) {
                 got.emplace(std::move(r));
                 if (replied_at) *replied_at = clock.now();
               });
    clock.advance(5000);
    return got;
  }
};

TEST(Fleet, SpawnedDeviceRegistersAndAnswersAfterItsDelay) {
  Rig rig;
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read", 200));
  auto found = rig.registry.discover(cap("weather.temperature.read"));
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].service_id, "dev-t/weather.temperature.read");
  EXPECT_EQ(found[0].cost_hint_ms, 200);
  EXPECT_TRUE(rig.keys.expected("dev-t").has_value());

  TimeMs start = rig.clock.now();
  TimeMs at = 0;
  auto reply = rig.call("dev-t", "weather.temperature.read", &at);
  ASSERT_TRUE(reply && reply->ok());
  EXPECT_EQ(at - start, 200);
  Message m = codec::decode(reply->value());
  EXPECT_EQ(m.correlation_id, "req-1");
  EXPECT_EQ(*m.body.find("temp_c"), Value(21));
  EXPECT_TRUE(rig.keys.verify("dev-t", m.headers.at(std::string(DeviceKeys::kHeader))));
}

TEST(Fleet, DuplicateDeviceIsRejected) {
  Rig rig;
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read"));
  try {
    rig.fleet.spawn_device(sensor("dev-t", "weather.humidity.read"));
    FAIL() << "duplicate accepted";
  } catch (const FrameworkError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ContractViolation);
  }
  EXPECT_EQ(rig.fleet.size(), 1u);
}

TEST(Fleet, InvalidProfilesAreRejected) {
  Rig rig;
  auto negative = sensor("dev-n", "weather.temperature.read", -1);
  EXPECT_THROW(rig.fleet.spawn_device(negative), FrameworkError);
  DeviceProfile empty;
  empty.device_id = "dev-e";
  EXPECT_THROW(rig.fleet.spawn_device(empty), FrameworkError);
  auto twice = sensor("dev-2", "weather.temperature.read");
  twice.capabilities.push_back(twice.capabilities[0]);
  EXPECT_THROW(rig.fleet.spawn_device(twice), FrameworkError);
}

TEST(Fleet, HundredDevicesAreAllDiscoverable) {
  Rig rig;
  for (int i = 0; i < 100; ++i) {
    rig.fleet.spawn_device(sensor("dev-" + std::to_string(i), "env.air.read", i));
  }
  EXPECT_EQ(rig.registry.live_entries().size(), 100u);
  auto found = rig.registry.discover(cap("env.air.read"));
  ASSERT_EQ(found.size(), 100u);
  std::set<std::string> ids;
  for (const auto& d : found) ids.insert(d.device_id);
  EXPECT_EQ(ids.size(), 100u);
}

TEST(Fleet, HeartbeatsKeepLeasesAlive) {
  Rig rig;
  auto p = sensor("dev-t", "weather.temperature.read");
  p.lease_ttl_ms = 3000;
  rig.fleet.spawn_device(p);
  rig.clock.advance(30000);
  EXPECT_EQ(rig.registry.discover(cap("weather.temperature.read")).size(), 1u);
}

TEST(Fleet, UnknownFaultTargetIsNotFound) {
  Rig rig;
  try {
    rig.fleet.inject_fault(FaultSpec{.target = "ghost", .duration_ms = 10});
    FAIL() << "fault accepted";
  } catch (const FrameworkError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
  }
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read"));
  EXPECT_THROW(rig.fleet.inject_fault(FaultSpec{.target = "dev-t", .duration_ms = 0}),
               FrameworkError);
  EXPECT_THROW(rig.fleet.inject_fault(FaultSpec{
                   .target = "dev-t", .kind = FaultSpec::Kind::Timing, .duration_ms = 10}),
               FrameworkError);
}

TEST(Fleet, CrashRefusesConnectionsAndHeals) {
  Rig rig;
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read"));
  auto d = rig.descriptor("dev-t", "weather.temperature.read");
  rig.fleet.inject_fault(FaultSpec{.target = "dev-t", .kind = FaultSpec::Kind::Crash,
                                   .start_ms = 0, .duration_ms = 10000});
  auto reply = rig.call("dev-t", "weather.temperature.read");
  ASSERT_TRUE(reply);
  ASSERT_FALSE(reply->ok());
  EXPECT_EQ(reply->error().kind(), ErrorKind::CrashFailure);
  EXPECT_FALSE(rig.fleet.ping(d).ok);
  EXPECT_TRUE(rig.fleet.ping(d).connection_refused);
  EXPECT_EQ(rig.fleet.requests_received("dev-t"), 0u);

  rig.clock.run_until(10000);
  EXPECT_TRUE(rig.fleet.ping(d).ok);
  reply = rig.call("dev-t", "weather.temperature.read");
  ASSERT_TRUE(reply && reply->ok());
}

TEST(Fleet, CrashedDeviceLetsItsLeaseLapseAndReRegistersOnHeal) {
  Rig rig;
  auto p = sensor("dev-t", "weather.temperature.read");
  p.lease_ttl_ms = 3000;
  rig.fleet.spawn_device(p);
  rig.fleet.inject_fault(FaultSpec{.target = "dev-t", .kind = FaultSpec::Kind::Crash,
                                   .start_ms = 0, .duration_ms = 10000});
  rig.clock.run_until(9999);
  EXPECT_TRUE(rig.registry.discover(cap("weather.temperature.read")).empty());
  rig.clock.run_until(10000);
  EXPECT_EQ(rig.registry.discover(cap("weather.temperature.read")).size(), 1u);
}

TEST(Fleet, OmissionReadsButNeverReplies) {
  Rig rig;
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read"));
  rig.fleet.inject_fault(FaultSpec{.target = "dev-t", .kind = FaultSpec::Kind::Omission,
                                   .start_ms = 0, .duration_ms = 10000});
  EXPECT_FALSE(rig.call("dev-t", "weather.temperature.read").has_value());
  EXPECT_EQ(rig.fleet.requests_received("dev-t"), 1u);
  EXPECT_TRUE(rig.fleet.ping(rig.descriptor("dev-t", "weather.temperature.read")).ok);
}

TEST(Fleet, TimingAddsExtraDelay) {
  Rig rig;
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read", 200));
  rig.fleet.inject_fault(FaultSpec{.target = "dev-t", .kind = FaultSpec::Kind::Timing,
                                   .start_ms = 0, .duration_ms = 10000, .extra_delay_ms = 700});
  TimeMs at = 0;
  auto reply = rig.call("dev-t", "weather.temperature.read", &at);
  ASSERT_TRUE(reply && reply->ok());
  EXPECT_EQ(at, 900);
}

TEST(Fleet, UnauthorisedRepliesOmitTheDeviceToken) {
  Rig rig;
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read"));
  rig.fleet.inject_fault(FaultSpec{.target = "dev-t", .kind = FaultSpec::Kind::Unauthorised,
                                   .start_ms = 0, .duration_ms = 10000});
  auto reply = rig.call("dev-t", "weather.temperature.read");
  ASSERT_TRUE(reply && reply->ok());
  EXPECT_EQ(codec::decode(reply->value()).headers.count(std::string(DeviceKeys::kHeader)), 0u);
}

TEST(Fleet, TransientAlternatesAtTheFlapPeriod) {
  Rig rig;
  rig.fleet.spawn_device(sensor("dev-t", "weather.temperature.read"));
  auto d = rig.descriptor("dev-t", "weather.temperature.read");
  rig.fleet.inject_fault(FaultSpec{.target = "dev-t", .kind = FaultSpec::Kind::Transient,
                                   .start_ms = 1000, .duration_ms = 4000,
                                   .flap_period_ms = 1000});
  std::vector<bool> up;
  for (TimeMs t : {500, 1000, 1999, 2000, 2999, 3000, 4000, 4999, 5000}) {
    rig.clock.run_until(t);
    up.push_back(rig.fleet.ping(d).ok);
  }
  EXPECT_EQ(up, (std::vector<bool>{true, false, false, true, true, false, true, true, true}));
}

TEST(Fleet, GeneratorsAreDeterministic) {
  auto run = [](std::uint64_t seed) {
    Rig rig;
    Json doc = Json::parse(R"({"id": "dev-r", "capabilities": [
      {"capability": "env.noise.read", "generator": {"kind": "random", "min": 0, "max": 9}},
      {"capability": "env.level.read", "generator": {"kind": "ramp", "start": 1, "step": 2}}]})");
    rig.fleet.spawn_device(profile_from_json(doc, seed));
    std::vector<Value> out;
    for (int i = 0; i < 20; ++i) {
      for (const char* c : {"env.noise.read", "env.level.read"}) {
        auto reply = rig.call("dev-r", c);
        out.push_back(codec::decode(reply->value()).body);
      }
    }
    return out;
  };
  auto a = run(7);
  EXPECT_EQ(a, run(7));
  EXPECT_NE(a, run(8));
  // Ramp readings: 1, 3, 5, ...
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(*a[2 * i + 1].find("value"), Value(static_cast<std::int64_t>(1 + 2 * i)));
    const auto r = a[2 * i].find("value")->as_int();
    EXPECT_GE(r, 0);
    EXPECT_LE(r, 9);
  }
}

TEST(Fleet, TelemetryIsPublishedOnTheBus) {
  Rig rig;
  auto p = sensor("dev-t", "weather.temperature.read");
  p.wire = WireKind::PubSub;
  p.telemetry = Telemetry{"weather.temperature.updated", 1000};
  rig.fleet.spawn_device(p);
  int seen = 0;
  auto sub = rig.bus.subscribe(
      "weather.#", [&](const BusEvent& e) {
        EXPECT_EQ(e.topic, "weather.temperature.updated");
        ++seen;
      },
      AckMode::Auto);
  rig.clock.run_until(10000);
  EXPECT_EQ(seen, 10);
}

Json doc(std::string_view text) { return Json::parse(text); }

TEST(Scenario, EmptyScenarioGivesAnEmptyReport) {
  auto report = run_scenario(parse_scenario(doc("{}")));
  EXPECT_TRUE(report.document["requests"].empty());
  EXPECT_TRUE(report.document["audit"].empty());
  EXPECT_TRUE(report.document["events"].empty());
  EXPECT_EQ(report.assertions_failed, 0u);
}

TEST(Scenario, ParseErrorsNameTheProblem) {
  EXPECT_THROW(parse_scenario(doc(R"({"bogus": 1})")), FrameworkError);
  EXPECT_THROW(parse_scenario(doc(R"({"config": {"monitor": {"nope": 1}}})")), FrameworkError);
  EXPECT_THROW(parse_scenario(doc(R"({"workload": [
      {"at_ms": 10, "capability": "a.b", "token": "t"},
      {"at_ms": 5, "capability": "a.b", "token": "t"}]})")),
               FrameworkError);
  EXPECT_THROW(parse_scenario(doc(R"({"assertions": [{"kind": "vibes"}]})")), FrameworkError);
  EXPECT_THROW(parse_scenario(doc(R"({"clock": {"mode": "sundial"}})")), FrameworkError);
}

TEST(Scenario, SeedOverrideWins) {
  auto s = parse_scenario(doc(R"({"clock": {"mode": "virtual", "seed": 3}})"), 11);
  EXPECT_EQ(s.seed, 11u);
}

const char* kTwoProviders = R"({
  "tokens": {"tok": "dash"},
  "config": {"monitor": {"probe_interval_ms": 1000, "failure_threshold": 3}},
  "devices": [
    {"id": "dev-y", "capabilities": [{"capability": "weather.temperature.read", "delay_ms": 200,
      "generator": {"kind": "constant", "value": {"temp_c": 21}}}]},
    {"id": "dev-z", "capabilities": [{"capability": "weather.temperature.read", "delay_ms": 250,
      "generator": {"kind": "constant", "value": {"temp_c": 22}}}]}],
  "faults": [{"target": "dev-y", "kind": "crash", "start_ms": 2000, "duration_ms": 60000}],
  "workload": [{"at_ms": 0, "capability": "weather.temperature.read", "token": "tok",
                "repeat": 50, "every_ms": 100}],
  "run_until_ms": 8000,
  "assertions": [{"kind": "outcome", "expect": "ok", "after_ms": 2000},
                 {"kind": "breaker", "service": "dev-y/weather.temperature.read",
                  "expect": "open"},
                 {"kind": "audit_count"}]
})";

TEST(Scenario, ConservationAndFailover) {
  auto report = run_scenario(parse_scenario(doc(kTwoProviders)));
  const Json& d = report.document;
  EXPECT_EQ(report.assertions_failed, 0u) << d["assertions"].dump(2);
  ASSERT_EQ(d["requests"].size(), 50u);
  EXPECT_EQ(d["audit"].size(), 50u);
  std::size_t via_z = 0;
  for (const auto& r : d["requests"]) {
    EXPECT_NE(r["outcome"], "pending");
    if (r["outcome"] == "ok" && r["body"]["temp_c"] == 22) ++via_z;
  }
  // Everything issued from the crash on is answered by z.
  EXPECT_EQ(via_z, 30u);
}

TEST(Scenario, FailingAssertionIsReported) {
  Json s = doc(kTwoProviders);
  s["assertions"] = Json::array({Json{{"kind", "outcome"}, {"expect", "NotFound"}}});
  auto report = run_scenario(parse_scenario(s));
  EXPECT_EQ(report.assertions_failed, 1u);
  EXPECT_FALSE(report.document["assertions"][0]["passed"].get<bool>());
  EXPECT_TRUE(report.document["assertions"][0].contains("detail"));
}

TEST(Scenario, ReportIsByteIdenticalForTheSameSeed) {
  auto s = parse_scenario(doc(kTwoProviders), 42);
  const std::string first = run_scenario(s).render();
  for (int i = 0; i < 2; ++i) EXPECT_EQ(run_scenario(s).render(), first);
}

std::filesystem::path scenario_file(const char* name) {
  return std::filesystem::path(IOTMESH_SCENARIO_DIR) / name;
}

class ShippedScenario : public ::testing::TestWithParam<const char*> {};

TEST_P(ShippedScenario, AllAssertionsPass) {
  auto report = run_scenario(load_scenario(scenario_file(GetParam())));
  EXPECT_EQ(report.assertions_failed, 0u) << report.document["assertions"].dump(2);
  EXPECT_EQ(report.document["audit"].size(), report.document["requests"].size());
}

INSTANTIATE_TEST_SUITE_P(Files, ShippedScenario,
                         ::testing::Values("latency.json", "failover.json", "faults.json",
                                           "promotion.json"),
                         [](const auto& info) {
                           std::string n = info.param;
                           return n.substr(0, n.find('.'));
                         });

TEST(Scenario, WallClockModeRuns) {
  Json s = doc(R"({
    "clock": {"mode": "wall"},
    "tokens": {"tok": "dash"},
    "devices": [{"id": "dev-a", "capabilities": [{"capability": "a.read", "delay_ms": 20}]}],
    "workload": [{"at_ms": 10, "capability": "a.read", "token": "tok", "repeat": 3,
                  "every_ms": 20}],
    "run_until_ms": 300,
    "assertions": [{"kind": "outcome", "expect": "ok"}, {"kind": "audit_count"}]
  })");
  auto report = run_scenario(parse_scenario(s));
  EXPECT_EQ(report.assertions_failed, 0u) << report.document["assertions"].dump(2);
}

}  // namespace
}  // namespace iotmesh
