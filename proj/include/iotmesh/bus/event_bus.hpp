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
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "iotmesh/core/message.hpp"
#include "iotmesh/core/scheduler.hpp"

namespace iotmesh {

using SubscriptionId = std::uint64_t;

inline constexpr std::string_view kDeadLetterTopic = "bus.deadletter";

struct BusEvent {
  std::string delivery_id;
  std::string topic;
  Message payload;
  int attempt = 1;
  SubscriptionId subscription = 0;
};

using EventHandler = std::function<void(const BusEvent&)>;

/// Subscription pattern: a concrete dotted path, optionally ending in ".*"
/// (exactly one more segment) or ".#" (the path itself or any suffix). A bare
/// "#" matches every topic.
class TopicPattern {
 public:
  static TopicPattern parse(std::string_view text);
  static bool is_valid(std::string_view text) noexcept;

  bool matches(std::string_view topic) const;
  const std::string& str() const noexcept { return text_; }

 private:
  enum class Tail { Exact, One, Any };
  std::string text_;
  std::string prefix_;
  Tail tail_ = Tail::Exact;
};

enum class AckMode { Manual, Auto };

namespace detail {
struct BusState;
}

/// Move-only handle; destroying it unsubscribes.
class Subscription {
 public:
  Subscription() = default;
  Subscription(Subscription&&) noexcept;
  Subscription& operator=(Subscription&&) noexcept;
  Subscription(const Subscription&) = delete;
  Subscription& operator=(const Subscription&) = delete;
  ~Subscription();

  SubscriptionId id() const noexcept { return id_; }
  bool active() const noexcept { return id_ != 0; }
  void ack(const std::string& delivery_id) const;
  void unsubscribe();

 private:
  friend class EventBus;
  Subscription(std::weak_ptr<detail::BusState> state, SubscriptionId id)
      : state_(std::move(state)), id_(id) {}
  std::weak_ptr<detail::BusState> state_;
  SubscriptionId id_ = 0;
};

/// In-process pub/sub with at-least-once delivery. Every delivery is posted
/// to the scheduler; an unacknowledged delivery is retried after the
/// redelivery timeout and moved to "bus.deadletter" once max_attempts
/// deliveries went unacknowledged.
///
/// Each (subscription, topic) pair is a FIFO queue whose head is the only
/// event in flight, so acknowledged events are always observed in publish
/// order.
class EventBus {
 public:
  struct Options {
    TimeMs redelivery_timeout_ms = 2000;
    int max_attempts = 5;
  };

  explicit EventBus(Scheduler& scheduler);
  EventBus(Scheduler& scheduler, Options options);
  ~EventBus();
  EventBus(const EventBus&) = delete;
  EventBus& operator=(const EventBus&) = delete;

  /// Throws ContractViolation when `topic` is not a concrete path.
  std::string publish(std::string_view topic, Message payload);
  Subscription subscribe(std::string_view pattern, EventHandler handler,
                         AckMode mode = AckMode::Manual);
  /// Throws NotFound when nothing is outstanding for (subscription, delivery_id).
  void ack(SubscriptionId subscription, const std::string& delivery_id);
  void unsubscribe(SubscriptionId subscription);

  std::vector<BusEvent> dead_letters() const;
  /// Events queued or in flight across all subscriptions.
  std::size_t outstanding() const;
  std::size_t subscriber_count() const;

 private:
  std::shared_ptr<detail::BusState> state_;
};

/// Remembers which delivery ids a consumer has already observed so that
/// redeliveries reach the wrapped handler exactly once. Delivery ids are
/// shared by every subscriber of one publish, so use one per subscription.
class Deduplicator {
 public:
  /// True the first time `delivery_id` is seen.
  bool first_time(const std::string& delivery_id);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_set<std::string> seen_;
};

/// Wraps `inner` so each delivery id is handled once. Duplicates go to
/// `on_duplicate` instead, which typically re-acknowledges them.
EventHandler deduplicated(std::shared_ptr<Deduplicator> seen, EventHandler inner,
                          EventHandler on_duplicate = {});

}  // namespace iotmesh
