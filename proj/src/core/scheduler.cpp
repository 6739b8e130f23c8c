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

#include "iotmesh/core/scheduler.hpp"

#include <algorithm>
#include <cstdio>

namespace iotmesh {

TimeMs VirtualScheduler::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

Scheduler::TimerId VirtualScheduler::schedule_at(TimeMs when, Task task) {
  std::lock_guard lock(mu_);
  when = std::max(when, now_);
  TimerId id = next_id_++;
  queue_.emplace(std::make_pair(when, id), std::move(task));
  due_.emplace(id, when);
  return id;
}

bool VirtualScheduler::cancel(TimerId id) {
  std::lock_guard lock(mu_);
  auto it = due_.find(id);
  if (it == due_.end()) return false;
  queue_.erase({it->second, id});
  due_.erase(it);
  return true;
}

bool VirtualScheduler::run_next() {
  Task task;
  {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return false;
    auto it = queue_.begin();
    now_ = it->first.first;
    due_.erase(it->first.second);
    task = std::move(it->second);
    queue_.erase(it);
  }
  task();
  return true;
}

std::size_t VirtualScheduler::run_until(TimeMs until) {
  std::size_t ran = 0;
  while (true) {
    {
      std::lock_guard lock(mu_);
      if (queue_.empty() || queue_.begin()->first.first > until) {
        now_ = std::max(now_, until);
        return ran;
      }
    }
    run_next();
    ++ran;
  }
}

std::size_t VirtualScheduler::run_until_idle(std::size_t max_events) {
  std::size_t ran = 0;
  while (ran < max_events && run_next()) ++ran;
  return ran;
}

std::size_t VirtualScheduler::pending() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

WallScheduler::WallScheduler()
    : origin_(std::chrono::steady_clock::now()), thread_([this] { loop(); }) {}

WallScheduler::~WallScheduler() { shutdown(); }

TimeMs WallScheduler::now() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               origin_)
      .count();
}

Scheduler::TimerId WallScheduler::schedule_at(TimeMs when, Task task) {
  TimerId id;
  {
    std::lock_guard lock(mu_);
    id = next_id_++;
    queue_.emplace(std::make_pair(when, id), std::move(task));
    due_.emplace(id, when);
  }
  cv_.notify_one();
  return id;
}

bool WallScheduler::cancel(TimerId id) {
  std::lock_guard lock(mu_);
  auto it = due_.find(id);
  if (it == due_.end()) return false;
  queue_.erase({it->second, id});
  due_.erase(it);
  return true;
}

void WallScheduler::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) {
      if (thread_.joinable() && !on_dispatch_thread()) thread_.join();
      return;
    }
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable() && !on_dispatch_thread()) thread_.join();
}

bool WallScheduler::on_dispatch_thread() const noexcept {
  return std::this_thread::get_id() == thread_.get_id();
}

void WallScheduler::loop() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    if (queue_.empty()) {
      cv_.wait(lock);
      continue;
    }
    auto it = queue_.begin();
    TimeMs due = it->first.first;
    TimeMs current = now();
    if (due > current) {
      cv_.wait_for(lock, std::chrono::milliseconds(due - current));
      continue;
    }
    Task task = std::move(it->second);
    due_.erase(it->first.second);
    queue_.erase(it);
    lock.unlock();
    try {
      task();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "iotmesh: scheduled task threw: %s\n", e.what());
    }
    lock.lock();
  }
}

struct PeriodicTask::State {
  Scheduler& scheduler;
  TimeMs period;
  std::function<void()> fn;
  std::recursive_mutex mu;
  bool active = true;
  Scheduler::TimerId timer = 0;

  State(Scheduler& s, TimeMs p, std::function<void()> f)
      : scheduler(s), period(p), fn(std::move(f)) {}
};

PeriodicTask::PeriodicTask(Scheduler& scheduler, TimeMs period, std::function<void()> fn,
                           TimeMs first_delay)
    : state_(std::make_shared<State>(scheduler, period, std::move(fn))) {
  arm(state_, first_delay < 0 ? period : first_delay);
}

PeriodicTask::~PeriodicTask() { stop(); }

void PeriodicTask::arm(const std::shared_ptr<State>& state, TimeMs delay) {
  std::weak_ptr<State> weak = state;
  state->timer = state->scheduler.schedule_after(delay, [weak] {
    auto self = weak.lock();
    if (!self) return;
    std::lock_guard lock(self->mu);
    if (!self->active) return;
    self->fn();
    if (self->active) arm(self, self->period);
  });
}

void PeriodicTask::stop() {
  if (!state_) return;
  std::lock_guard lock(state_->mu);
  if (!state_->active) return;
  state_->active = false;
  state_->scheduler.cancel(state_->timer);
}

std::string IdGenerator::next() {
  std::uint64_t n = ++counter_;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(n));
  return prefix_ + buf;
}

}  // namespace iotmesh
