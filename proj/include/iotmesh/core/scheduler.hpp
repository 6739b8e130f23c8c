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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "iotmesh/core/message.hpp"

namespace iotmesh {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimeMs now() const = 0;
};

/// Time source plus timer queue. Every framework timeout goes through this
/// interface, so the same code runs under the deterministic virtual clock
/// and against wall time. Tasks scheduled for the same instant run in the
/// order they were scheduled.
class Scheduler : public Clock {
 public:
  using Task = std::function<void()>;
  using TimerId = std::uint64_t;

  /// Times in the past are clamped to now().
  virtual TimerId schedule_at(TimeMs when, Task task) = 0;
  /// Returns false when the timer already ran or was cancelled.
  virtual bool cancel(TimerId id) = 0;

  TimerId schedule_after(TimeMs delay, Task task) {
    return schedule_at(now() + delay, std::move(task));
  }
  TimerId post(Task task) { return schedule_at(now(), std::move(task)); }
};

/// Discrete-event scheduler: time only moves when the owner runs events.
class VirtualScheduler final : public Scheduler {
 public:
  explicit VirtualScheduler(TimeMs start = 0) : now_(start) {}

  TimeMs now() const override;
  TimerId schedule_at(TimeMs when, Task task) override;
  bool cancel(TimerId id) override;

  /// Runs the earliest pending event, advancing the clock to its time.
  bool run_next();
  /// Runs every event due at or before `until`, then sets the clock to it.
  std::size_t run_until(TimeMs until);
  std::size_t advance(TimeMs delta) { return run_until(now() + delta); }
  /// Runs until the queue is empty or `max_events` have executed.
  std::size_t run_until_idle(std::size_t max_events = 50'000'000);
  std::size_t pending() const;

 private:
  mutable std::mutex mu_;
  TimeMs now_;
  TimerId next_id_ = 1;
  std::map<std::pair<TimeMs, TimerId>, Task> queue_;
  std::unordered_map<TimerId, TimeMs> due_;
};

/// Real-time scheduler with one dispatch thread. Tasks must not block.
class WallScheduler final : public Scheduler {
 public:
  WallScheduler();
  ~WallScheduler() override;
  WallScheduler(const WallScheduler&) = delete;
  WallScheduler& operator=(const WallScheduler&) = delete;

  TimeMs now() const override;
  TimerId schedule_at(TimeMs when, Task task) override;
  bool cancel(TimerId id) override;

  /// Stops the dispatch thread; pending tasks are dropped.
  void shutdown();
  bool on_dispatch_thread() const noexcept;

 private:
  void loop();

  const std::chrono::steady_clock::time_point origin_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  TimerId next_id_ = 1;
  std::map<std::pair<TimeMs, TimerId>, Task> queue_;
  std::unordered_map<TimerId, TimeMs> due_;
  std::thread thread_;
};

/// Repeats `fn` every `period` until stopped or destroyed. stop() waits for
/// a concurrently running invocation to finish.
class PeriodicTask {
 public:
  PeriodicTask(Scheduler& scheduler, TimeMs period, std::function<void()> fn,
               TimeMs first_delay = -1);
  ~PeriodicTask();
  PeriodicTask(const PeriodicTask&) = delete;
  PeriodicTask& operator=(const PeriodicTask&) = delete;

  void stop();

 private:
  struct State;
  static void arm(const std::shared_ptr<State>& state, TimeMs delay);
  std::shared_ptr<State> state_;
};

/// Deterministic ids: prefix plus a zero-padded counter ("tx-000001").
class IdGenerator {
 public:
  explicit IdGenerator(std::string prefix) : prefix_(std::move(prefix)) {}
  std::string next();

 private:
  std::string prefix_;
  std::atomic<std::uint64_t> counter_{0};
};

}  // namespace iotmesh
