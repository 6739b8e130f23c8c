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

#include "iotmesh/core/schema.hpp"

#include <set>

#include "iotmesh/core/error.hpp"

namespace iotmesh {

Schema::Schema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
  std::set<std::string_view> seen;
  for (const auto& field : fields_) {
    if (field.name.empty()) {
      throw FrameworkError(ErrorKind::ContractViolation, "schema field with empty name");
    }
    if (!seen.insert(field.name).second) {
      throw FrameworkError(ErrorKind::ContractViolation,
                           "duplicate schema field '" + field.name + "'");
    }
  }
}

const FieldSpec* Schema::find(std::string_view name) const {
  for (const auto& field : fields_) {
    if (field.name == name) return &field;
  }
  return nullptr;
}

std::vector<Violation> validate(const Value& body, const Schema& schema) {
  std::vector<Violation> out;
  if (schema.empty()) return out;
  if (!body.is_map()) {
    for (const auto& field : schema.fields()) {
      if (field.required) out.push_back({field.name, "missing " + field.name});
    }
    return out;
  }
  for (const auto& field : schema.fields()) {
    const Value* present = body.find(field.name);
    if (present == nullptr) {
      if (field.required) out.push_back({field.name, "missing " + field.name});
      continue;
    }
    if (present->kind() != field.kind) {
      out.push_back({field.name, "kind mismatch: " + field.name + " expected " +
                                     std::string(to_string(field.kind)) + ", got " +
                                     std::string(to_string(present->kind()))});
    }
  }
  return out;
}

bool satisfies(const Schema& offered, const Schema& required) {
  for (const auto& field : required.fields()) {
    if (!field.required) continue;
    const FieldSpec* match = offered.find(field.name);
    if (match == nullptr || match->kind != field.kind) return false;
  }
  return true;
}

}  // namespace iotmesh
