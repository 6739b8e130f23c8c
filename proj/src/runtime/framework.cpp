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

#include "iotmesh/runtime/framework.hpp"

#include <charconv>
#include <functional>

namespace iotmesh {

namespace {

std::int64_t parse_int(std::string_view key, std::string_view text, std::int64_t min) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw_error(ErrorKind::ContractViolation,
                std::string(key) + " expects an integer, got '" + std::string(text) + "'");
  }
  if (v < min) {
    throw_error(ErrorKind::ContractViolation,
                std::string(key) + " must be at least " + std::to_string(min));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw_error(ErrorKind::ContractViolation, std::string(key) + " expects true or false");
}

using Setter = std::function<void(FrameworkConfig&, std::string_view, std::string_view)>;

const std::vector<std::pair<std::string_view, Setter>>& setters() {
  static const std::vector<std::pair<std::string_view, Setter>> table = {
      {"monitor.enabled",
       [](auto& c, auto k, auto v) { c.monitor_enabled = parse_bool(k, v); }},
      {"monitor.probe_interval_ms",
       [](auto& c, auto k, auto v) { c.monitor.probe_interval_ms = parse_int(k, v, 1); }},
      {"monitor.failure_threshold",
       [](auto& c, auto k, auto v) { c.monitor.failure_threshold = static_cast<int>(parse_int(k, v, 1)); }},
      {"monitor.cooldown_intervals",
       [](auto& c, auto k, auto v) { c.monitor.cooldown_intervals = static_cast<int>(parse_int(k, v, 1)); }},
      {"monitor.flap_window_intervals",
       [](auto& c, auto k, auto v) { c.monitor.flap_window_intervals = static_cast<int>(parse_int(k, v, 1)); }},
      {"assembler.promotion_threshold",
       [](auto& c, auto k, auto v) { c.assembler.promotion_threshold = static_cast<std::size_t>(parse_int(k, v, 1)); }},
      {"assembler.demand_window_ms",
       [](auto& c, auto k, auto v) { c.assembler.demand_window_ms = parse_int(k, v, 1); }},
      {"bus.redelivery_timeout_ms",
       [](auto& c, auto k, auto v) { c.bus.redelivery_timeout_ms = parse_int(k, v, 1); }},
      {"bus.max_attempts",
       [](auto& c, auto k, auto v) { c.bus.max_attempts = static_cast<int>(parse_int(k, v, 1)); }},
      {"invoker.late_grace_ms",
       [](auto& c, auto k, auto v) { c.invoker.late_grace_ms = parse_int(k, v, 0); }},
      {"gateway.default_deadline_ms",
       [](auto& c, auto k, auto v) { c.default_deadline_ms = parse_int(k, v, 1); }},
      {"auditor.directory",
       [](auto& c, auto, auto v) {
         if (v.empty()) {
           c.auditor.directory.reset();
         } else {
           c.auditor.directory = std::filesystem::path(std::string(v));
         }
       }},
      {"auditor.segment_records",
       [](auto& c, auto k, auto v) { c.auditor.segment_records = static_cast<std::size_t>(parse_int(k, v, 1)); }},
  };
  return table;
}

}  // namespace

void apply_setting(FrameworkConfig& config, std::string_view key, std::string_view value) {
  for (const auto& [name, set] : setters()) {
    if (name == key) {
      set(config, key, value);
      return;
    }
  }
  throw_error(ErrorKind::ContractViolation, "unknown setting '" + std::string(key) + "'");
}

const std::vector<std::string_view>& setting_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> out;
    for (const auto& [name, set] : setters()) out.push_back(name);
    return out;
  }();
  return keys;
}

Framework::Framework(Scheduler& scheduler, ServiceTransport& transport, FrameworkConfig config)
    : scheduler_(scheduler),
      config_(std::move(config)),
      registry_(scheduler_),
      bus_(scheduler_, config_.bus),
      auditor_(config_.auditor),
      monitor_(scheduler_, registry_, transport, &bus_, config_.monitor),
      invoker_(scheduler_, transport, &monitor_, &device_keys_, config_.invoker),
      assembler_(registry_, invoker_, config_.assembler),
      gateway_(scheduler_, registry_, auth_, invoker_, assembler_, auditor_, &monitor_) {
  for (const auto& [token, consumer] : config_.tokens) auth_.add_token(token, consumer);
}

Framework::~Framework() { stop(); }

void Framework::start() {
  if (config_.monitor_enabled) monitor_.start();
  if (!renewals_) {
    renewals_ = std::make_unique<PeriodicTask>(
        scheduler_, std::max<TimeMs>(1, config_.assembler.promoted_lease_ttl_ms / 3),
        [this] { assembler_.renew_promotions(); });
  }
}

void Framework::stop() {
  monitor_.stop();
  if (renewals_) {
    renewals_->stop();
    renewals_.reset();
  }
}

}  // namespace iotmesh
