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
#include <string>
#include <string_view>

#include "iotmesh/core/message.hpp"

namespace iotmesh::codec {

struct Limits {
  std::size_t max_bytes = std::size_t{1} << 20;
  std::size_t max_depth = Message::kMaxDepth;
};

/// Serializes `message` in `format`. Encoding is a pure function of the
/// message: envelope fields in fixed order, map keys sorted, floats in
/// shortest round-trip form. Throws ContractViolation when the message
/// breaks a depth, size, or UTF-8 constraint.
EncodedMessage encode(const Message& message, WireFormat format, const Limits& limits = {});

/// Parses `encoded` completely or throws ContractViolation; never returns
/// a partial message. The decoded capability must match
/// `encoded.declared_capability`.
Message decode(const EncodedMessage& encoded, const Limits& limits = {});

/// Re-encodes in `target`. When the format already matches, the input bytes
/// are returned unchanged after validation.
EncodedMessage transform(const EncodedMessage& encoded, WireFormat target,
                         const Limits& limits = {});

/// MIME type used by the request binding ("application/json", ...).
std::string_view content_type(WireFormat format) noexcept;

namespace detail {
std::string write_json(const Message& message);
Message read_json(std::string_view bytes, std::size_t max_depth);
std::string write_xml(const Message& message);
Message read_xml(std::string_view bytes, std::size_t max_depth);

/// Shortest decimal that parses back to the same double.
std::string format_float(double value);
/// XML element name for a map key; unsafe bytes become `_xHH`.
std::string escape_xml_name(std::string_view key);
std::string unescape_xml_name(std::string_view name);
}  // namespace detail

}  // namespace iotmesh::codec
