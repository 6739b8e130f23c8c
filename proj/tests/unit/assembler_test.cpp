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

#include "iotmesh/assembler/assembler.hpp"
#include "support/scripted_devices.hpp"

namespace iotmesh {
namespace {

Capability cap(const char* s) { return Capability::parse(s); }

ServiceDescriptor provider(std::string id, const char* capability, TimeMs cost,
                           Schema output = Schema(),
                           WireFormat format = WireFormat::Json) {
  return ServiceDescriptor{.service_id = std::move(id),
                           .capability = cap(capability),
                           .device_id = "dev",
                           .domain = "smart-home",
                           .output_schema = std::move(output),
                           .preferred_format = format,
                           .cost_hint_ms = cost,
                           .lease_ttl_ms = 10'000'000};
}

Message request(const char* capability, std::string id = "req-1") {
  return Message{.message_id = std::move(id),
                 .capability = cap(capability),
                 .body = Value(Value::Map{{"unit", Value("C")}})};
}

template <typename T>
struct Slot {
  std::optional<T> value;
  TimeMs at = -1;
};

// ---- invoker ----

class InvokerTest : public ::testing::Test {
 protected:
  InvokerTest() {
    registry.register_service(provider("y", "weather.temperature.read", 100, Schema(),
                                       WireFormat::Xml));
    devices.behaviour["y"] = {.delay = 200, .body = Value(Value::Map{{"c", Value(21)}})};
  }

  Slot<Result<Message>> call(TimeMs deadline) {
    Slot<Result<Message>> slot;
    invoker.invoke(registry.entry("y")->descriptor, request("weather.temperature.read"), deadline,
                   [&](Result<Message> r) {
                     slot.value.emplace(std::move(r));
                     slot.at = clock.now();
                   });
    clock.run_until_idle();
    return slot;
  }

  VirtualScheduler clock;
  Registry registry{clock};
  testing::ScriptedDevices devices{clock};
  EventBus bus{clock};
  Monitor monitor{clock, registry, devices, &bus};
  DeviceKeys keys;
  ServiceInvoker invoker{clock, devices, &monitor, &keys};
};

TEST_F(InvokerTest, RequestUsesProviderFormat) {
  auto slot = call(1000);
  ASSERT_TRUE(slot.value && slot.value->ok());
  EXPECT_EQ(slot.value->value().body, Value(Value::Map{{"c", Value(21)}}));
  EXPECT_EQ(slot.at, 200);
  ASSERT_EQ(devices.received.size(), 1u);
  EXPECT_EQ(devices.received[0].second.format, WireFormat::Xml);
}

TEST_F(InvokerTest, ReplyExactlyAtDeadlineIsOnTime) {
  auto slot = call(200);
  ASSERT_TRUE(slot.value);
  EXPECT_TRUE(slot.value->ok());
}

TEST_F(InvokerTest, ReplyOneMillisecondLateIsTimingFault) {
  auto slot = call(199);
  ASSERT_TRUE(slot.value);
  ASSERT_FALSE(slot.value->ok());
  EXPECT_EQ(slot.value->error().kind(), ErrorKind::TimingFault);
  EXPECT_EQ(slot.at, 200);
  EXPECT_EQ(monitor.classification("y"), ErrorKind::TimingFault);
}

TEST_F(InvokerTest, SilentProviderIsOmission) {
  devices.behaviour["y"].silent = true;
  auto slot = call(500);
  ASSERT_TRUE(slot.value);
  EXPECT_EQ(slot.value->error().kind(), ErrorKind::TimingFault);
  EXPECT_EQ(slot.at, 501);
  EXPECT_EQ(monitor.classification("y"), ErrorKind::OmissionFailure);
}

TEST_F(InvokerTest, CrashedProviderIsCrashFailure) {
  devices.behaviour["y"].crashed = true;
  auto slot = call(500);
  ASSERT_TRUE(slot.value);
  EXPECT_EQ(slot.value->error().kind(), ErrorKind::CrashFailure);
  EXPECT_EQ(slot.at, 0);
  EXPECT_EQ(monitor.classification("y"), ErrorKind::CrashFailure);
}

TEST_F(InvokerTest, DeviceTokenIsVerifiedAndStripped) {
  keys.set("dev", "secret");
  auto missing = call(1000);
  EXPECT_EQ(missing.value->error().kind(), ErrorKind::UnauthorisedAccess);
  EXPECT_EQ(monitor.classification("y"), ErrorKind::UnauthorisedAccess);
  devices.behaviour["y"].token = "secret";
  auto good = call(5000);
  ASSERT_TRUE(good.value->ok());
  EXPECT_EQ(good.value->value().headers.count("x-device-token"), 0u);
}

// ---- assembler ----

class AssemblerTest : public ::testing::Test {
 protected:
  void add(const std::string& id, const char* capability, TimeMs delay, Value body,
           TimeMs cost = 100) {
    registry.register_service(provider(id, capability, cost));
    devices.behaviour[id] = {.delay = delay, .body = std::move(body)};
  }

  CompositeSpec three_members(ExecutionMode mode) {
    add("a", "weather.temperature.read", 200, Value(Value::Map{{"c", Value(21)}, {"raw", Value(1)}}));
    add("b", "weather.humidity.read", 200, Value(Value::Map{{"rh", Value(40)}}));
    add("c", "weather.pressure.read", 200, Value(Value::Map{{"hpa", Value(1013)}}));
    return CompositeSpec{.capability = cap("weather.report"),
                         .members = {cap("weather.temperature.read"), cap("weather.humidity.read"),
                                     cap("weather.pressure.read")},
                         .merge = {{0, "c", "temperature"}, {1, "rh", "humidity"}, {2, "hpa", "pressure"}},
                         .mode = mode};
  }

  Slot<AssemblyOutcome> run(const CompositeSpec& spec, TimeMs deadline = 10'000,
                            std::string id = "req-1") {
    Slot<AssemblyOutcome> slot;
    auto plan = assembler.plan(spec, clock.now() + deadline);
    const TimeMs start = clock.now();
    assembler.execute(plan, request("weather.report", std::move(id)), [&](AssemblyOutcome o) {
      slot.value.emplace(std::move(o));
      slot.at = clock.now() - start;
    });
    clock.run_until_idle();
    return slot;
  }

  VirtualScheduler clock;
  Registry registry{clock};
  testing::ScriptedDevices devices{clock};
  EventBus bus{clock};
  Monitor monitor{clock, registry, devices, &bus};
  ServiceInvoker invoker{clock, devices, &monitor};
  Assembler assembler{registry, invoker};
};

TEST_F(AssemblerTest, PlanResolvesEveryMember) {
  auto spec = three_members(ExecutionMode::Parallel);
  auto plan = assembler.plan(spec, 1000);
  ASSERT_EQ(plan.resolved.size(), 3u);
  EXPECT_EQ(plan.resolved[0].service_id, "a");
  EXPECT_EQ(plan.deadline_at_ms, 1000);
}

TEST_F(AssemblerTest, PlanNamesMissingMember) {
  auto spec = three_members(ExecutionMode::Parallel);
  registry.deregister("b");
  try {
    assembler.plan(spec, 1000);
    FAIL();
  } catch (const FrameworkError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    EXPECT_NE(e.detail().find("weather.humidity.read"), std::string::npos);
  }
}

TEST_F(AssemblerTest, PlanPrefersCheaperProvider) {
  auto spec = three_members(ExecutionMode::Parallel);
  add("t-expensive", "weather.temperature.read", 10, Value(), 200);
  add("t-cheap", "weather.temperature.read", 10, Value(), 50);
  EXPECT_EQ(assembler.plan(spec, 1000).resolved[0].cost_hint_ms, 50);
}

TEST_F(AssemblerTest, ChainedTakesTheSumOfMemberTimes) {
  auto slot = run(three_members(ExecutionMode::Chained));
  ASSERT_TRUE(slot.value && slot.value->result.ok());
  EXPECT_EQ(slot.at, 600);
}

TEST_F(AssemblerTest, ParallelTakesTheSlowestMemberTime) {
  auto slot = run(three_members(ExecutionMode::Parallel));
  ASSERT_TRUE(slot.value && slot.value->result.ok());
  EXPECT_EQ(slot.at, 200);
  EXPECT_LT(slot.at, 300);
}

TEST_F(AssemblerTest, BodyIsExactlyTheMergeImage) {
  auto slot = run(three_members(ExecutionMode::Parallel));
  const Message& out = slot.value->result.value();
  EXPECT_EQ(out.body, Value(Value::Map{{"temperature", Value(21)},
                                       {"humidity", Value(40)},
                                       {"pressure", Value(1013)}}));
  EXPECT_EQ(out.capability, cap("weather.report"));
}

TEST_F(AssemblerTest, EveryMemberCallSharesTheCorrelationId) {
  run(three_members(ExecutionMode::Chained), 10'000, "req-77");
  std::set<std::string> correlations;
  for (const auto& [id, encoded] : devices.received) {
    correlations.insert(codec::decode(encoded).correlation_id.value_or("<none>"));
  }
  EXPECT_EQ(correlations, std::set<std::string>{"req-77"});
}

TEST_F(AssemblerTest, ChainedFeedsOutputForward) {
  run(three_members(ExecutionMode::Chained));
  auto to_b = devices.requests_to("b");
  ASSERT_EQ(to_b.size(), 1u);
  EXPECT_EQ(to_b[0].body, devices.behaviour["a"].body);
}

TEST_F(AssemblerTest, CrashedMemberFailsOverOnce) {
  auto spec = three_members(ExecutionMode::Parallel);
  add("b2", "weather.humidity.read", 50, Value(Value::Map{{"rh", Value(41)}}), 150);
  devices.behaviour["b"].crashed = true;
  auto slot = run(spec);
  ASSERT_TRUE(slot.value->result.ok());
  EXPECT_EQ(slot.value->result.value().body.find("humidity")->as_int(), 41);
  std::vector<std::string> hop_ids;
  for (const Hop& h : slot.value->hops) hop_ids.push_back(h.service_id);
  EXPECT_EQ(hop_ids, (std::vector<std::string>{"b", "b2", "a", "c"}));
  EXPECT_EQ(slot.value->hops[0].outcome, ErrorKind::CrashFailure);
}

TEST_F(AssemblerTest, FailoverExhaustedPropagatesError) {
  auto spec = three_members(ExecutionMode::Parallel);
  add("b2", "weather.humidity.read", 50, Value(), 150);
  devices.behaviour["b"].crashed = true;
  devices.behaviour["b2"].crashed = true;
  auto slot = run(spec);
  ASSERT_FALSE(slot.value->result.ok());
  EXPECT_EQ(slot.value->result.error().kind(), ErrorKind::CrashFailure);
}

TEST_F(AssemblerTest, DeadlineBreachIsTimingFault) {
  auto slot = run(three_members(ExecutionMode::Chained), 500);
  ASSERT_FALSE(slot.value->result.ok());
  EXPECT_EQ(slot.value->result.error().kind(), ErrorKind::TimingFault);
  EXPECT_EQ(slot.at, 501);
}

TEST_F(AssemblerTest, MissingMappedFieldIsContractViolation) {
  auto spec = three_members(ExecutionMode::Parallel);
  devices.behaviour["c"].body = Value(Value::Map{{"other", Value(1)}});
  auto slot = run(spec);
  EXPECT_EQ(slot.value->result.error().kind(), ErrorKind::ContractViolation);
}

TEST_F(AssemblerTest, DemandWindowAndThreshold) {
  const std::string sig = "weather.humidity.read,weather.temperature.read";
  EXPECT_EQ(assembler.record_demand(sig).count, 1u);
  for (int i = 0; i < 8; ++i) {
    clock.advance(1000);
    EXPECT_FALSE(assembler.record_demand(sig).promotable());
  }
  clock.advance(1000);
  auto counter = assembler.record_demand(sig);
  EXPECT_EQ(counter.count, 10u);
  EXPECT_TRUE(counter.promotable());
  // Monotone while the window holds.
  EXPECT_TRUE(assembler.record_demand(sig).promotable());

  const std::string spread = "a.x,a.y";
  DemandCounter last;
  for (int i = 0; i < 10; ++i) {
    last = assembler.record_demand(spread);
    clock.advance(12'000);  // 10 requests over 120 s
  }
  EXPECT_FALSE(last.promotable());
  EXPECT_LE(last.count, 5u);
}

TEST_F(AssemblerTest, PromotionRegistersCompositeOnce) {
  auto spec = three_members(ExecutionMode::Parallel);
  DemandCounter below{"s", 9, 60'000, 10};
  EXPECT_FALSE(assembler.maybe_promote(below, spec).has_value());
  DemandCounter at{"s", 10, 60'000, 10};
  auto promoted = assembler.maybe_promote(at, spec);
  ASSERT_TRUE(promoted.has_value());
  EXPECT_EQ(promoted->granularity, Granularity::Composite);
  EXPECT_EQ(promoted->service_id, "composite/weather.report");
  EXPECT_EQ(promoted->cost_hint_ms, 100);
  EXPECT_FALSE(assembler.maybe_promote(at, spec).has_value());
  auto found = registry.discover(cap("weather.report"));
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].service_id, "composite/weather.report");

  auto chained = spec;
  chained.mode = ExecutionMode::Chained;
  chained.capability = cap("weather.report.chained");
  EXPECT_EQ(assembler.maybe_promote(at, chained)->cost_hint_ms, 300);
}

TEST_F(AssemblerTest, RenewalKeepsPromotionAlive) {
  auto spec = three_members(ExecutionMode::Parallel);
  assembler.maybe_promote(DemandCounter{"s", 10, 60'000, 10}, spec);
  for (int i = 0; i < 10; ++i) {
    clock.advance(kDefaultLeaseTtlMs / 3);
    assembler.renew_promotions();
  }
  EXPECT_EQ(registry.discover(cap("weather.report")).size(), 1u);
}

}  // namespace
}  // namespace iotmesh
