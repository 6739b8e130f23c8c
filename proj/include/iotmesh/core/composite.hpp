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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iotmesh/core/capability.hpp"
#include "iotmesh/core/schema.hpp"

namespace iotmesh {

enum class ExecutionMode { Parallel, Chained };

std::string_view to_string(ExecutionMode mode) noexcept;
std::optional<ExecutionMode> parse_execution_mode(std::string_view text) noexcept;

/// Copies member `member`'s output field `from` into composite field `to`.
struct MergeRule {
  std::size_t member = 0;
  std::string from;
  std::string to;

  friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

/// Plan for answering `capability` by combining fine-grained member
/// services.
struct CompositeSpec {
  Capability capability;
  std::vector<Capability> members;
  std::vector<MergeRule> merge;
  ExecutionMode mode = ExecutionMode::Parallel;
  Schema output_schema;

  friend bool operator==(const CompositeSpec&, const CompositeSpec&) = default;
};

/// Throws ContractViolation: fewer than two members, a merge rule naming a
/// missing member, or two rules writing the same composite field.
void check_composite(const CompositeSpec& spec);

/// Normalized member set: sorted, de-duplicated capabilities joined by ','.
/// Requests with the same signature count as "similar" for promotion.
std::string demand_signature(const std::vector<Capability>& members);

}  // namespace iotmesh
