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

#include <random>

#include "iotmesh/monitor/monitor.hpp"
#include "support/fake_transport.hpp"

namespace iotmesh {
namespace {

ServiceDescriptor provider(std::string id, TimeMs cost = 100) {
  return ServiceDescriptor{.service_id = std::move(id),
                           .capability = Capability::parse("weather.temperature.read"),
                           .device_id = "dev",
                           .domain = "smart-home",
                           .output_schema = Schema({{"c", ValueKind::Int, true}}),
                           .cost_hint_ms = cost,
                           .lease_ttl_ms = 10'000'000};
}

TEST(Classify, AllSixteenSymptomTuples) {
  // Oracle written as an explicit truth table rather than derived from the
  // implementation's if-chain.
  for (int bits = 0; bits < 16; ++bits) {
    Symptoms s{.probe_ok = (bits & 1) != 0,
               .request_timed_out = (bits & 2) != 0,
               .connection_refused = (bits & 4) != 0,
               .deadline_exceeded = (bits & 8) != 0};
    std::optional<ErrorKind> expected;
    if (!s.probe_ok || s.connection_refused) {
      expected = ErrorKind::CrashFailure;
    } else if (s.request_timed_out) {
      expected = ErrorKind::OmissionFailure;
    } else if (s.deadline_exceeded) {
      expected = ErrorKind::TimingFault;
    }
    EXPECT_EQ(classify(s), expected) << "tuple " << bits;
    EXPECT_EQ(classify(s, true), expected ? std::optional(ErrorKind::TransientFault) : std::nullopt)
        << "tuple " << bits;
  }
}

TEST(Classify, NamedCases) {
  EXPECT_EQ(classify({.probe_ok = true, .request_timed_out = true}), ErrorKind::OmissionFailure);
  EXPECT_EQ(classify({.probe_ok = false, .connection_refused = true}), ErrorKind::CrashFailure);
  EXPECT_EQ(classify({.probe_ok = true, .deadline_exceeded = true}), ErrorKind::TimingFault);
  EXPECT_EQ(classify({}), std::nullopt);
}

class MonitorTest : public ::testing::Test {
 protected:
  MonitorTest() {
    registry.register_service(provider("y", 100));
    registry.register_service(provider("z", 150));
    registry.register_service(provider("w", 200));
    events = bus.subscribe("service.#", [this](const BusEvent& e) { seen.push_back(e); },
                           AckMode::Auto);
  }

  VirtualScheduler clock;
  Registry registry{clock};
  testing::FakeTransport transport;
  EventBus bus{clock};
  Monitor monitor{clock, registry, transport, &bus};
  Subscription events;
  std::vector<BusEvent> seen;
};

TEST_F(MonitorTest, HealthyDeviceStaysUp) {
  auto s = monitor.probe("y");
  EXPECT_EQ(s.status, HealthStatus::Up);
  EXPECT_EQ(s.consecutive_failures, 0);
  EXPECT_EQ(s.breaker, BreakerState::Closed);
  EXPECT_EQ(s.last_probe_ms, 0);
}

TEST_F(MonitorTest, UnknownServiceIsNotFound) {
  EXPECT_THROW(monitor.probe("nope"), FrameworkError);
}

TEST_F(MonitorTest, ThreeFailuresOpenTheBreakerAndRedirect) {
  transport.set_crashed("y");
  EXPECT_EQ(monitor.probe("y").status, HealthStatus::Suspect);
  clock.advance(1000);
  EXPECT_EQ(monitor.probe("y").breaker, BreakerState::Closed);
  clock.advance(1000);
  auto s = monitor.probe("y");
  EXPECT_EQ(s.breaker, BreakerState::Open);
  EXPECT_EQ(s.status, HealthStatus::Down);
  EXPECT_EQ(s.open_until_ms, 2000 + 5000);
  EXPECT_EQ(s.last_classification, ErrorKind::CrashFailure);
  EXPECT_TRUE(registry.is_suspended("y"));
  EXPECT_FALSE(monitor.admits("y"));
  clock.run_until_idle();
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0].topic, "service.redirect");
  EXPECT_EQ(seen[0].payload.body.find("failed")->as_str(), "y");
  EXPECT_EQ(seen[0].payload.body.find("replacement")->as_str(), "z");
}

TEST_F(MonitorTest, BreakerStateMachineWalk) {
  transport.set_crashed("y");
  for (int i = 0; i < 3; ++i) {
    monitor.probe("y");
    clock.advance(1000);
  }
  // Opened at t=2000 until 7000.
  EXPECT_EQ(monitor.probe("y").breaker, BreakerState::Open);  // t=3000
  clock.run_until(7000);
  EXPECT_EQ(monitor.probe("y").breaker, BreakerState::HalfOpen);
  clock.advance(1000);
  EXPECT_EQ(monitor.probe("y").breaker, BreakerState::Open);  // trial failed
  EXPECT_EQ(monitor.health("y")->open_until_ms, 8000 + 5000);
  clock.run_until(13000);
  EXPECT_EQ(monitor.probe("y").breaker, BreakerState::HalfOpen);
  transport.set_up("y");
  clock.advance(1000);
  auto s = monitor.probe("y");
  EXPECT_EQ(s.breaker, BreakerState::Closed);
  EXPECT_EQ(s.status, HealthStatus::Up);
  EXPECT_FALSE(registry.is_suspended("y"));
  EXPECT_TRUE(monitor.admits("y"));
}

TEST_F(MonitorTest, ReachableBreakerTransitionsOnly) {
  // Random walk over ping outcomes and clock steps; every observed breaker
  // change must be one of the four legal edges.
  std::mt19937_64 rng(17);
  BreakerState prev = BreakerState::Closed;
  for (int step = 0; step < 5000; ++step) {
    if (rng() % 2) {
      transport.set_up("y");
    } else {
      transport.set_crashed("y");
    }
    clock.advance(static_cast<TimeMs>(500 + rng() % 2000));
    BreakerState next = monitor.probe("y").breaker;
    if (next != prev) {
      bool legal = (prev == BreakerState::Closed && next == BreakerState::Open) ||
                   (prev == BreakerState::Open && next == BreakerState::HalfOpen) ||
                   (prev == BreakerState::HalfOpen && next == BreakerState::Closed) ||
                   (prev == BreakerState::HalfOpen && next == BreakerState::Open);
      ASSERT_TRUE(legal) << to_string(prev) << " -> " << to_string(next);
    }
    auto h = monitor.health("y");
    if (h->breaker == BreakerState::Open) {
      ASSERT_NE(h->status, HealthStatus::Up);
    }
    prev = next;
  }
}

TEST_F(MonitorTest, NoEquivalentPublishesUnavailable) {
  registry.deregister("z");
  registry.deregister("w");
  auto action = monitor.on_down("y");
  EXPECT_EQ(action.topic, "service.unavailable");
  EXPECT_FALSE(action.replacement_service_id.has_value());
  clock.run_until_idle();
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0].topic, "service.unavailable");
}

TEST_F(MonitorTest, DownEquivalentIsSkipped) {
  transport.set_crashed("z");
  for (int i = 0; i < 3; ++i) monitor.probe("z");
  ASSERT_EQ(monitor.health("z")->breaker, BreakerState::Open);
  auto action = monitor.on_down("y");
  EXPECT_EQ(action.replacement_service_id, "w");
}

TEST_F(MonitorTest, RecoveryBeforeThresholdIsTransient) {
  transport.set_crashed("y");
  monitor.probe("y");
  transport.set_up("y");
  clock.advance(1000);
  auto s = monitor.probe("y");
  EXPECT_EQ(s.status, HealthStatus::Up);
  EXPECT_EQ(s.last_classification, ErrorKind::TransientFault);
}

TEST_F(MonitorTest, FlappingProbesClassifyTransientWithoutPermanentDown) {
  for (int i = 0; i < 20; ++i) {
    if (i % 2) {
      transport.set_crashed("y");
    } else {
      transport.set_up("y");
    }
    auto s = monitor.probe("y");
    EXPECT_NE(s.breaker, BreakerState::Open);
    clock.advance(1000);
  }
  EXPECT_TRUE(monitor.is_flapping("y"));
  EXPECT_EQ(monitor.classification("y"), ErrorKind::TransientFault);
  transport.set_crashed("y");
  EXPECT_EQ(monitor.observe("y", {.connection_refused = true}), ErrorKind::TransientFault);
}

TEST_F(MonitorTest, RequestPathObservations) {
  EXPECT_EQ(monitor.observe("y", {.request_timed_out = true}), ErrorKind::OmissionFailure);
  EXPECT_EQ(monitor.classification("y"), ErrorKind::OmissionFailure);
  EXPECT_EQ(monitor.observe("y", {.deadline_exceeded = true}), ErrorKind::TimingFault);
  transport.set_crashed("y");
  EXPECT_EQ(monitor.observe("y", {.request_timed_out = true}), ErrorKind::CrashFailure);
  monitor.record_fault("z", ErrorKind::UnauthorisedAccess);
  EXPECT_EQ(monitor.classification("z"), ErrorKind::UnauthorisedAccess);
}

TEST_F(MonitorTest, PeriodicLoopOpensBreakerWithinThreeIntervals) {
  monitor.start();
  clock.run_until(4500);
  transport.set_crashed("y");  // crash between probes
  clock.run_until(4500 + 3000);
  EXPECT_EQ(monitor.health("y")->breaker, BreakerState::Open);
  EXPECT_EQ(monitor.health("z")->status, HealthStatus::Up);
  monitor.stop();
}

TEST(HealthValue, Shape) {
  HealthState s{.service_id = "y",
                .status = HealthStatus::Down,
                .consecutive_failures = 3,
                .breaker = BreakerState::Open,
                .open_until_ms = 7000,
                .last_probe_ms = 2000,
                .last_classification = ErrorKind::CrashFailure};
  Value v = health_to_value(s);
  EXPECT_EQ(v.find("status")->as_str(), "down");
  EXPECT_EQ(v.find("breaker")->as_str(), "open");
  EXPECT_EQ(v.find("open_until_ms")->as_int(), 7000);
  EXPECT_EQ(v.find("last_classification")->as_str(), "CrashFailure");
}

}  // namespace
}  // namespace iotmesh
