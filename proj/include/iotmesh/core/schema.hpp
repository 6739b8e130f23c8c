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

#include <string>
#include <vector>

#include "iotmesh/core/value.hpp"

namespace iotmesh {

struct FieldSpec {
  std::string name;
  ValueKind kind = ValueKind::Null;
  bool required = true;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

/// Flat list of top-level body fields. Nested values are checked by kind
/// only. An empty schema accepts any payload.
class Schema {
 public:
  Schema() = default;
  /// Throws ContractViolation on duplicate or empty field names.
  explicit Schema(std::vector<FieldSpec> fields);

  const std::vector<FieldSpec>& fields() const noexcept { return fields_; }
  const FieldSpec* find(std::string_view name) const;
  bool empty() const noexcept { return fields_.empty(); }

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<FieldSpec> fields_;
};

struct Violation {
  std::string field;
  std::string reason;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Returns an empty list when `body` satisfies `schema`. Every required field
/// must be present; any declared field that is present must have the
/// declared kind. Undeclared fields are permitted.
std::vector<Violation> validate(const Value& body, const Schema& schema);

/// True when `offered` can stand in for a provider whose output must carry
/// every required field of `required` with the same kind.
bool satisfies(const Schema& offered, const Schema& required);

}  // namespace iotmesh
