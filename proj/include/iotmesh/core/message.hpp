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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "iotmesh/core/capability.hpp"
#include "iotmesh/core/value.hpp"

namespace iotmesh {

using TimeMs = std::int64_t;

enum class WireFormat { Json, Xml };

std::string_view to_string(WireFormat format) noexcept;
/// Accepts "json" / "xml".
std::optional<WireFormat> parse_wire_format(std::string_view text) noexcept;

/// Canonical message: routing envelope plus a format-neutral body.
struct Message {
  static constexpr std::size_t kMaxDepth = 32;

  std::string message_id;
  std::optional<std::string> correlation_id;
  Capability capability;
  TimeMs timestamp_ms = 0;
  std::map<std::string, std::string> headers;
  Value body;

  friend bool operator==(const Message&, const Message&) = default;
};

/// Throws ContractViolation when the message breaks an envelope or body
/// invariant: empty id, body deeper than `max_depth`, or an empty map key.
void check_message(const Message& message, std::size_t max_depth = Message::kMaxDepth);

/// A message serialized in one wire format.
struct EncodedMessage {
  WireFormat format = WireFormat::Json;
  std::string bytes;
  Capability declared_capability;

  friend bool operator==(const EncodedMessage&, const EncodedMessage&) = default;
};

}  // namespace iotmesh
