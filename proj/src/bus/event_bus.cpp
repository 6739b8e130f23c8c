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

#include "iotmesh/bus/event_bus.hpp"

#include <deque>
#include <map>
#include <optional>

#include "iotmesh/core/capability.hpp"
#include "iotmesh/core/error.hpp"

namespace iotmesh {

TopicPattern TopicPattern::parse(std::string_view text) {
  TopicPattern p;
  p.text_ = std::string(text);
  if (text == "#") {
    p.tail_ = Tail::Any;
    return p;
  }
  std::string_view base = text;
  if (text.size() > 2 && text.substr(text.size() - 2) == ".*") {
    p.tail_ = Tail::One;
    base = text.substr(0, text.size() - 2);
  } else if (text.size() > 2 && text.substr(text.size() - 2) == ".#") {
    p.tail_ = Tail::Any;
    base = text.substr(0, text.size() - 2);
  }
  if (!Capability::is_valid(base)) {
    throw_error(ErrorKind::ContractViolation, "malformed subscription pattern: " + p.text_);
  }
  p.prefix_ = std::string(base);
  return p;
}

bool TopicPattern::is_valid(std::string_view text) noexcept {
  try {
    parse(text);
    return true;
  } catch (...) {
    return false;
  }
}

bool TopicPattern::matches(std::string_view topic) const {
  if (prefix_.empty()) return true;  // bare "#"
  if (topic == prefix_) return tail_ != Tail::One;
  if (tail_ == Tail::Exact) return false;
  if (topic.size() <= prefix_.size() + 1 || topic.substr(0, prefix_.size()) != prefix_ ||
      topic[prefix_.size()] != '.') {
    return false;
  }
  if (tail_ == Tail::Any) return true;
  return topic.find('.', prefix_.size() + 1) == std::string_view::npos;
}

namespace detail {

struct Outstanding {
  BusEvent event;
  Scheduler::TimerId timer = 0;
  bool dispatched = false;
};

struct Sub {
  TopicPattern pattern;
  EventHandler handler;
  AckMode mode;
  std::map<std::string, std::deque<Outstanding>> queues;  // keyed by topic
};

struct BusState : std::enable_shared_from_this<BusState> {
  BusState(Scheduler& s, EventBus::Options o) : scheduler(s), options(o) {}

  Scheduler& scheduler;
  const EventBus::Options options;
  mutable std::mutex mu;
  IdGenerator ids{"ev-"};
  SubscriptionId next_sub = 1;
  std::map<SubscriptionId, Sub> subs;
  std::vector<BusEvent> dead;

  // All helpers below expect `mu` to be held.

  std::deque<Outstanding>* queue(SubscriptionId sub, const std::string& topic) {
    auto s = subs.find(sub);
    if (s == subs.end()) return nullptr;
    auto q = s->second.queues.find(topic);
    if (q == s->second.queues.end() || q->second.empty()) return nullptr;
    return &q->second;
  }

  void schedule_delivery(SubscriptionId sub, const std::string& topic, const std::string& id,
                         int attempt) {
    std::weak_ptr<BusState> weak = weak_from_this();
    scheduler.post([weak, sub, topic, id, attempt] {
      if (auto self = weak.lock()) self->deliver(sub, topic, id, attempt);
    });
  }

  void pop_and_continue(SubscriptionId sub, const std::string& topic) {
    auto s = subs.find(sub);
    auto& q = s->second.queues[topic];
    if (q.front().timer != 0) scheduler.cancel(q.front().timer);
    q.pop_front();
    if (q.empty()) {
      s->second.queues.erase(topic);
      return;
    }
    q.front().dispatched = true;
    schedule_delivery(sub, topic, q.front().event.delivery_id, q.front().event.attempt);
  }

  void deliver(SubscriptionId sub, const std::string& topic, const std::string& id, int attempt) {
    std::optional<BusEvent> event;
    EventHandler handler;
    AckMode mode;
    {
      std::lock_guard lock(mu);
      auto* q = queue(sub, topic);
      if (q == nullptr) return;
      Outstanding& head = q->front();
      if (head.event.delivery_id != id || head.event.attempt != attempt) return;
      std::weak_ptr<BusState> weak = weak_from_this();
      head.timer = scheduler.schedule_after(options.redelivery_timeout_ms,
                                            [weak, sub, topic, id, attempt] {
                                              if (auto self = weak.lock()) {
                                                self->expire(sub, topic, id, attempt);
                                              }
                                            });
      event.emplace(head.event);
      const Sub& s = subs.at(sub);
      handler = s.handler;
      mode = s.mode;
    }
    try {
      handler(*event);
    } catch (...) {
      return;  // a throwing handler counts as a missing ack
    }
    if (mode == AckMode::Auto) {
      std::lock_guard lock(mu);
      auto* q = queue(sub, topic);
      if (q != nullptr && q->front().event.delivery_id == id) pop_and_continue(sub, topic);
    }
  }

  void expire(SubscriptionId sub, const std::string& topic, const std::string& id, int attempt) {
    std::optional<BusEvent> to_dead_letter;
    {
      std::lock_guard lock(mu);
      auto* q = queue(sub, topic);
      if (q == nullptr) return;
      Outstanding& head = q->front();
      if (head.event.delivery_id != id || head.event.attempt != attempt) return;
      head.timer = 0;
      if (attempt < options.max_attempts) {
        head.event.attempt = attempt + 1;
        schedule_delivery(sub, topic, id, attempt + 1);
        return;
      }
      dead.push_back(head.event);
      if (topic != kDeadLetterTopic) to_dead_letter = head.event;
      pop_and_continue(sub, topic);
    }
    if (to_dead_letter) {
      Message payload = std::move(to_dead_letter->payload);
      payload.headers["x-dead-topic"] = to_dead_letter->topic;
      payload.headers["x-dead-delivery-id"] = to_dead_letter->delivery_id;
      payload.headers["x-dead-subscription"] = std::to_string(to_dead_letter->subscription);
      payload.headers["x-dead-attempts"] = std::to_string(to_dead_letter->attempt);
      publish(kDeadLetterTopic, std::move(payload));
    }
  }

  std::string publish(std::string_view topic, Message payload) {
    if (!Capability::is_valid(topic)) {
      throw_error(ErrorKind::ContractViolation,
                  "publish needs a concrete topic, got '" + std::string(topic) + "'");
    }
    std::lock_guard lock(mu);
    std::string id = ids.next();
    const std::string key(topic);
    for (auto& [sub_id, sub] : subs) {
      if (!sub.pattern.matches(topic)) continue;
      auto& q = sub.queues[key];
      q.push_back(Outstanding{BusEvent{id, key, payload, 1, sub_id}});
      if (q.size() == 1) {
        q.front().dispatched = true;
        schedule_delivery(sub_id, key, id, 1);
      }
    }
    return id;
  }

  void ack(SubscriptionId sub, const std::string& delivery_id) {
    std::lock_guard lock(mu);
    auto s = subs.find(sub);
    if (s != subs.end()) {
      for (auto& [topic, q] : s->second.queues) {
        if (!q.empty() && q.front().dispatched && q.front().event.delivery_id == delivery_id) {
          const std::string key = topic;
          pop_and_continue(sub, key);
          return;
        }
      }
    }
    throw_error(ErrorKind::NotFound, "no outstanding delivery " + delivery_id +
                                         " for subscription " + std::to_string(sub));
  }

  void unsubscribe(SubscriptionId sub) {
    std::lock_guard lock(mu);
    auto s = subs.find(sub);
    if (s == subs.end()) return;
    for (auto& [topic, q] : s->second.queues) {
      if (!q.empty() && q.front().timer != 0) scheduler.cancel(q.front().timer);
    }
    subs.erase(s);
  }
};

}  // namespace detail

Subscription::Subscription(Subscription&& other) noexcept
    : state_(std::move(other.state_)), id_(std::exchange(other.id_, 0)) {}

Subscription& Subscription::operator=(Subscription&& other) noexcept {
  if (this != &other) {
    unsubscribe();
    state_ = std::move(other.state_);
    id_ = std::exchange(other.id_, 0);
  }
  return *this;
}

Subscription::~Subscription() { unsubscribe(); }

void Subscription::ack(const std::string& delivery_id) const {
  auto state = state_.lock();
  if (!state || id_ == 0) throw_error(ErrorKind::NotFound, "subscription is closed");
  state->ack(id_, delivery_id);
}

void Subscription::unsubscribe() {
  if (id_ == 0) return;
  if (auto state = state_.lock()) state->unsubscribe(id_);
  id_ = 0;
  state_.reset();
}

EventBus::EventBus(Scheduler& scheduler) : EventBus(scheduler, Options{}) {}

EventBus::EventBus(Scheduler& scheduler, Options options)
    : state_(std::make_shared<detail::BusState>(scheduler, options)) {
  if (options.redelivery_timeout_ms <= 0 || options.max_attempts < 1) {
    throw_error(ErrorKind::ContractViolation, "bus needs a positive timeout and attempt count");
  }
}

EventBus::~EventBus() {
  std::lock_guard lock(state_->mu);
  for (auto& [id, sub] : state_->subs) {
    for (auto& [topic, q] : sub.queues) {
      if (!q.empty() && q.front().timer != 0) state_->scheduler.cancel(q.front().timer);
    }
  }
}

std::string EventBus::publish(std::string_view topic, Message payload) {
  return state_->publish(topic, std::move(payload));
}

Subscription EventBus::subscribe(std::string_view pattern, EventHandler handler, AckMode mode) {
  TopicPattern parsed = TopicPattern::parse(pattern);
  if (!handler) throw_error(ErrorKind::ContractViolation, "subscription needs a handler");
  std::lock_guard lock(state_->mu);
  SubscriptionId id = state_->next_sub++;
  state_->subs.emplace(id, detail::Sub{std::move(parsed), std::move(handler), mode, {}});
  return Subscription(state_, id);
}

void EventBus::ack(SubscriptionId subscription, const std::string& delivery_id) {
  state_->ack(subscription, delivery_id);
}

void EventBus::unsubscribe(SubscriptionId subscription) { state_->unsubscribe(subscription); }

std::vector<BusEvent> EventBus::dead_letters() const {
  std::lock_guard lock(state_->mu);
  return state_->dead;
}

std::size_t EventBus::outstanding() const {
  std::lock_guard lock(state_->mu);
  std::size_t n = 0;
  for (const auto& [id, sub] : state_->subs) {
    for (const auto& [topic, q] : sub.queues) n += q.size();
  }
  return n;
}

std::size_t EventBus::subscriber_count() const {
  std::lock_guard lock(state_->mu);
  return state_->subs.size();
}

bool Deduplicator::first_time(const std::string& delivery_id) {
  std::lock_guard lock(mu_);
  return seen_.insert(delivery_id).second;
}

std::size_t Deduplicator::size() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

EventHandler deduplicated(std::shared_ptr<Deduplicator> seen, EventHandler inner,
                          EventHandler on_duplicate) {
  return [seen = std::move(seen), inner = std::move(inner),
          on_duplicate = std::move(on_duplicate)](const BusEvent& event) {
    if (seen->first_time(event.delivery_id)) {
      inner(event);
    } else if (on_duplicate) {
      on_duplicate(event);
    }
  };
}

}  // namespace iotmesh
