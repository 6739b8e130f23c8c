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

// nlohmann::json conversions for the document formats (snapshots, composite
// spec files, scenario files). The wire codec has its own serializer.

#include <string_view>

#include <json.hpp>

#include "iotmesh/core/composite.hpp"
#include "iotmesh/core/descriptor.hpp"
#include "iotmesh/core/schema.hpp"
#include "iotmesh/core/value.hpp"

namespace iotmesh {

using Json = nlohmann::json;

Json value_to_json(const Value& value);
/// Integers above INT64_MAX, non-finite floats, and empty map keys are
/// rejected with ContractViolation.
Value value_from_json(const Json& json);

Json schema_to_json(const Schema& schema);
Schema schema_from_json(const Json& json);

Json descriptor_to_json(const ServiceDescriptor& descriptor);
ServiceDescriptor descriptor_from_json(const Json& json);

/// Composite spec file: {"capability", "members", "merge", "mode", "schema"}.
Json composite_to_json(const CompositeSpec& spec);
CompositeSpec composite_from_json(const Json& json);

std::vector<MergeRule> merge_rules_from_json(const Json& json);
Json merge_rules_to_json(const std::vector<MergeRule>& rules);

namespace json_field {
// Lookup helpers that throw ContractViolation naming the missing or
// mistyped key.
const Json& require(const Json& object, std::string_view key);
std::string string(const Json& object, std::string_view key);
std::int64_t integer(const Json& object, std::string_view key);
std::int64_t integer_or(const Json& object, std::string_view key, std::int64_t fallback);
std::string string_or(const Json& object, std::string_view key, std::string fallback);
bool boolean_or(const Json& object, std::string_view key, bool fallback);
void reject_unknown(const Json& object, std::initializer_list<std::string_view> known,
                    std::string_view context);
}  // namespace json_field

}  // namespace iotmesh
