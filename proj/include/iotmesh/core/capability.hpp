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

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace iotmesh {

/// Dotted, lowercase name of what a service does, e.g.
/// "weather.temperature.read". Discovery is keyed on this, never on the
/// device that happens to provide it.
///
/// Grammar: 1 to 8 segments joined by '.', each `[a-z][a-z0-9_]*`, at most
/// 128 characters in total.
class Capability {
 public:
  static constexpr std::size_t kMaxSegments = 8;
  static constexpr std::size_t kMaxLength = 128;

  /// Throws FrameworkError(ContractViolation) when `text` is not a valid name.
  static Capability parse(std::string_view text);
  static bool is_valid(std::string_view text) noexcept;

  const std::string& str() const noexcept { return text_; }
  std::vector<std::string_view> segments() const;

  friend auto operator<=>(const Capability&, const Capability&) = default;
  friend bool operator==(const Capability&, const Capability&) = default;

 private:
  explicit Capability(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

inline const std::string& render(const Capability& capability) noexcept {
  return capability.str();
}

}  // namespace iotmesh
