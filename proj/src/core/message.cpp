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

#include "iotmesh/core/message.hpp"

#include "iotmesh/core/error.hpp"

namespace iotmesh {

std::string_view to_string(WireFormat format) noexcept {
  return format == WireFormat::Json ? "json" : "xml";
}

std::optional<WireFormat> parse_wire_format(std::string_view text) noexcept {
  if (text == "json") return WireFormat::Json;
  if (text == "xml") return WireFormat::Xml;
  return std::nullopt;
}

namespace {

void check_value(const Value& value, std::size_t level, std::size_t max_depth) {
  if (level > max_depth) {
    throw FrameworkError(ErrorKind::ContractViolation,
                         "body deeper than " + std::to_string(max_depth));
  }
  if (value.kind() == ValueKind::List) {
    for (const auto& item : value.as_list()) check_value(item, level + 1, max_depth);
  } else if (value.kind() == ValueKind::Map) {
    for (const auto& [key, item] : value.as_map()) {
      if (key.empty()) throw FrameworkError(ErrorKind::ContractViolation, "empty map key");
      check_value(item, level + 1, max_depth);
    }
  }
}

}  // namespace

void check_message(const Message& message, std::size_t max_depth) {
  if (message.message_id.empty()) {
    throw FrameworkError(ErrorKind::ContractViolation, "empty message id");
  }
  check_value(message.body, 1, max_depth);
}

}  // namespace iotmesh
