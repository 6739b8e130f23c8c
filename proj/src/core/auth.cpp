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

#include "iotmesh/core/auth.hpp"

#include <mutex>

#include "iotmesh/core/error.hpp"

namespace iotmesh {

bool constant_time_equal(std::string_view a, std::string_view b) noexcept {
  const std::size_t n = a.size() > b.size() ? a.size() : b.size();
  unsigned char diff = a.size() == b.size() ? 0 : 1;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char x = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
    const unsigned char y = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
    diff |= static_cast<unsigned char>(x ^ y);
  }
  return diff == 0;
}

void Authenticator::add_token(std::string token, std::string consumer_id) {
  if (token.empty() || consumer_id.empty()) {
    throw_error(ErrorKind::ContractViolation, "token and consumer id must be non-empty");
  }
  std::unique_lock lock(mu_);
  tokens_.insert_or_assign(std::move(token), std::move(consumer_id));
}

std::string Authenticator::authenticate(std::string_view token) const {
  if (token.empty()) throw_error(ErrorKind::UnauthorisedAccess, "missing auth token");
  std::shared_lock lock(mu_);
  const std::string* found = nullptr;
  for (const auto& [known, consumer] : tokens_) {
    if (constant_time_equal(known, token)) found = &consumer;
  }
  if (found == nullptr) throw_error(ErrorKind::UnauthorisedAccess, "unknown auth token");
  return *found;
}

std::size_t Authenticator::size() const {
  std::shared_lock lock(mu_);
  return tokens_.size();
}

void DeviceKeys::set(std::string device_id, std::string token) {
  std::unique_lock lock(mu_);
  keys_.insert_or_assign(std::move(device_id), std::move(token));
}

std::optional<std::string> DeviceKeys::expected(const std::string& device_id) const {
  std::shared_lock lock(mu_);
  auto it = keys_.find(device_id);
  if (it == keys_.end()) return std::nullopt;
  return it->second;
}

bool DeviceKeys::verify(const std::string& device_id, std::string_view presented) const {
  auto key = expected(device_id);
  return !key || constant_time_equal(*key, presented);
}

}  // namespace iotmesh
