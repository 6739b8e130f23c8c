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

#include "iotmesh/core/descriptor.hpp"

#include <algorithm>
#include <set>

#include "iotmesh/core/composite.hpp"
#include "iotmesh/core/error.hpp"

namespace iotmesh {

std::string_view to_string(ServiceClass c) noexcept {
  return c == ServiceClass::Functional ? "functional" : "nonfunctional";
}

std::string_view to_string(Granularity g) noexcept {
  return g == Granularity::Atomic ? "atomic" : "composite";
}

std::optional<ServiceClass> parse_service_class(std::string_view text) noexcept {
  if (text == "functional") return ServiceClass::Functional;
  if (text == "nonfunctional") return ServiceClass::NonFunctional;
  return std::nullopt;
}

std::optional<Granularity> parse_granularity(std::string_view text) noexcept {
  if (text == "atomic") return Granularity::Atomic;
  if (text == "composite") return Granularity::Composite;
  return std::nullopt;
}

void check_descriptor(const ServiceDescriptor& d) {
  if (d.service_id.empty()) {
    throw FrameworkError(ErrorKind::ContractViolation, "empty service_id");
  }
  if (d.cost_hint_ms < 0) {
    throw FrameworkError(ErrorKind::ContractViolation,
                         "negative cost_hint_ms for " + d.service_id);
  }
  if (d.lease_ttl_ms <= 0) {
    throw FrameworkError(ErrorKind::ContractViolation,
                         "lease_ttl_ms must be positive for " + d.service_id);
  }
}

std::string_view to_string(ExecutionMode mode) noexcept {
  return mode == ExecutionMode::Parallel ? "parallel" : "chained";
}

std::optional<ExecutionMode> parse_execution_mode(std::string_view text) noexcept {
  if (text == "parallel") return ExecutionMode::Parallel;
  if (text == "chained") return ExecutionMode::Chained;
  return std::nullopt;
}

void check_composite(const CompositeSpec& spec) {
  if (spec.members.size() < 2) {
    throw FrameworkError(ErrorKind::ContractViolation,
                         "composite " + spec.capability.str() + " needs at least two members");
  }
  std::set<std::string_view> targets;
  for (const auto& rule : spec.merge) {
    if (rule.member >= spec.members.size()) {
      throw FrameworkError(ErrorKind::ContractViolation,
                           "merge rule references member " + std::to_string(rule.member) +
                               " of " + std::to_string(spec.members.size()));
    }
    if (rule.from.empty() || rule.to.empty()) {
      throw FrameworkError(ErrorKind::ContractViolation, "merge rule with empty field name");
    }
    if (!targets.insert(rule.to).second) {
      throw FrameworkError(ErrorKind::ContractViolation,
                           "merge rules write composite field '" + rule.to + "' twice");
    }
  }
}

std::string demand_signature(const std::vector<Capability>& members) {
  std::vector<std::string> names;
  names.reserve(members.size());
  for (const auto& m : members) names.push_back(m.str());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ',';
    out += n;
  }
  return out;
}

}  // namespace iotmesh
