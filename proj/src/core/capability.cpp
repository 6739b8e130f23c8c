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

#include "iotmesh/core/capability.hpp"

#include "iotmesh/core/error.hpp"

namespace iotmesh {

namespace {

bool lower(char c) { return c >= 'a' && c <= 'z'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

// Empty string when valid, otherwise the first violation found.
std::string check(std::string_view text) {
  if (text.empty()) return "empty capability";
  if (text.size() > Capability::kMaxLength) return "capability longer than 128 characters";
  std::size_t segments = 0;
  std::size_t begin = 0;
  while (true) {
    std::size_t end = text.find('.', begin);
    std::string_view segment =
        text.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin);
    ++segments;
    if (segment.empty()) return "empty segment";
    if (!lower(segment.front())) return "segment must start with a lowercase letter";
    for (char c : segment) {
      if (!lower(c) && !digit(c) && c != '_') return "invalid character in segment";
    }
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  if (segments > Capability::kMaxSegments) return "more than 8 segments";
  return {};
}

}  // namespace

Capability Capability::parse(std::string_view text) {
  if (std::string problem = check(text); !problem.empty()) {
    throw FrameworkError(ErrorKind::ContractViolation,
                         "malformed capability '" + std::string(text) + "': " + problem);
  }
  return Capability(std::string(text));
}

bool Capability::is_valid(std::string_view text) noexcept { return check(text).empty(); }

std::vector<std::string_view> Capability::segments() const {
  std::vector<std::string_view> out;
  std::string_view view = text_;
  std::size_t begin = 0;
  while (true) {
    std::size_t end = view.find('.', begin);
    if (end == std::string_view::npos) {
      out.push_back(view.substr(begin));
      return out;
    }
    out.push_back(view.substr(begin, end - begin));
    begin = end + 1;
  }
}

}  // namespace iotmesh
