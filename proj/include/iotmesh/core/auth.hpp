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

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

namespace iotmesh {

/// Compares without early exit so timing does not reveal the matching prefix.
bool constant_time_equal(std::string_view a, std::string_view b) noexcept;

/// Static token table mapping consumer tokens to consumer ids. Lookup scans
/// every entry with a constant-time comparison.
class Authenticator {
 public:
  void add_token(std::string token, std::string consumer_id);
  /// Throws UnauthorisedAccess for empty or unknown tokens.
  std::string authenticate(std::string_view token) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::string> tokens_;
};

/// Tokens that devices must attach to their replies ("x-device-token").
/// Devices without an entry are not checked.
class DeviceKeys {
 public:
  static constexpr std::string_view kHeader = "x-device-token";

  void set(std::string device_id, std::string token);
  std::optional<std::string> expected(const std::string& device_id) const;
  /// True when the device has no key or `presented` matches it.
  bool verify(const std::string& device_id, std::string_view presented) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::string> keys_;
};

}  // namespace iotmesh
