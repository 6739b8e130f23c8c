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

#include "iotmesh/codec/codec.hpp"

#include <charconv>
#include <cmath>

#include "iotmesh/core/error.hpp"
#include "iotmesh/core/utf8.hpp"

namespace iotmesh::codec {

namespace {

void check_strings(const Value& value) {
  switch (value.kind()) {
    case ValueKind::Str:
      if (!is_valid_utf8(value.as_str())) {
        throw FrameworkError(ErrorKind::ContractViolation, "string is not valid UTF-8");
      }
      break;
    case ValueKind::List:
      for (const auto& item : value.as_list()) check_strings(item);
      break;
    case ValueKind::Map:
      for (const auto& [k, v] : value.as_map()) {
        if (!is_valid_utf8(k)) {
          throw FrameworkError(ErrorKind::ContractViolation, "map key is not valid UTF-8");
        }
        check_strings(v);
      }
      break;
    default: break;
  }
}

void check_encodable(const Message& message, const Limits& limits) {
  check_message(message, limits.max_depth);
  auto utf8 = [](const std::string& s, const char* what) {
    if (!is_valid_utf8(s)) {
      throw FrameworkError(ErrorKind::ContractViolation, std::string(what) + " is not valid UTF-8");
    }
  };
  utf8(message.message_id, "message id");
  if (message.correlation_id) utf8(*message.correlation_id, "correlation id");
  for (const auto& [k, v] : message.headers) {
    utf8(k, "header name");
    utf8(v, "header value");
  }
  check_strings(message.body);
}

}  // namespace

std::string_view content_type(WireFormat format) noexcept {
  return format == WireFormat::Json ? "application/json" : "application/xml";
}

EncodedMessage encode(const Message& message, WireFormat format, const Limits& limits) {
  check_encodable(message, limits);
  std::string bytes =
      format == WireFormat::Json ? detail::write_json(message) : detail::write_xml(message);
  if (bytes.size() > limits.max_bytes) {
    throw FrameworkError(ErrorKind::ContractViolation,
                         "encoded message of " + std::to_string(bytes.size()) +
                             " bytes exceeds limit of " + std::to_string(limits.max_bytes));
  }
  return EncodedMessage{format, std::move(bytes), message.capability};
}

Message decode(const EncodedMessage& encoded, const Limits& limits) {
  if (encoded.bytes.size() > limits.max_bytes) {
    throw FrameworkError(ErrorKind::ContractViolation, "encoded message exceeds size limit");
  }
  Message message = encoded.format == WireFormat::Json
                        ? detail::read_json(encoded.bytes, limits.max_depth)
                        : detail::read_xml(encoded.bytes, limits.max_depth);
  check_message(message, limits.max_depth);
  if (message.capability != encoded.declared_capability) {
    throw FrameworkError(ErrorKind::ContractViolation,
                         "message capability " + message.capability.str() +
                             " does not match declared " + encoded.declared_capability.str());
  }
  return message;
}

EncodedMessage transform(const EncodedMessage& encoded, WireFormat target, const Limits& limits) {
  Message message = decode(encoded, limits);
  if (encoded.format == target) return encoded;
  return encode(message, target, limits);
}

namespace detail {

std::string format_float(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) {
    throw FrameworkError(ErrorKind::ContractViolation, "float formatting failed");
  }
  return std::string(buf, end);
}

}  // namespace detail

}  // namespace iotmesh::codec
