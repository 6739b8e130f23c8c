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

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace iotmesh {

/// Fault taxonomy shared by every module. The first five kinds are the
/// runtime faults a consumer or operator can observe; ContractViolation and
/// NotFound are artifact-level kinds for malformed input and absent entities.
enum class ErrorKind {
  UnauthorisedAccess,
  CrashFailure,
  OmissionFailure,
  TimingFault,
  TransientFault,
  ContractViolation,
  NotFound,
};

inline constexpr std::array<ErrorKind, 7> kAllErrorKinds{
    ErrorKind::UnauthorisedAccess, ErrorKind::CrashFailure,
    ErrorKind::OmissionFailure,    ErrorKind::TimingFault,
    ErrorKind::TransientFault,     ErrorKind::ContractViolation,
    ErrorKind::NotFound,
};

std::string_view to_string(ErrorKind kind) noexcept;
std::optional<ErrorKind> parse_error_kind(std::string_view text) noexcept;

class FrameworkError : public std::runtime_error {
 public:
  FrameworkError(ErrorKind kind, std::string detail,
                 std::optional<std::string> transaction_id = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::optional<std::string>& transaction_id() const noexcept {
    return transaction_id_;
  }

  /// Copy of this error tagged with a transaction id.
  FrameworkError with_transaction(std::string transaction_id) const;

 private:
  ErrorKind kind_;
  std::string detail_;
  std::optional<std::string> transaction_id_;
};

[[noreturn]] void throw_error(ErrorKind kind, std::string detail);

/// Value-or-error carrier for asynchronous completions. Synchronous APIs
/// throw FrameworkError instead.
template <typename T>
class Result {
 public:
  Result(T value) : state_(std::in_place_index<0>, std::move(value)) {}
  Result(FrameworkError error)
      : state_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const noexcept { return state_.index() == 0; }
  explicit operator bool() const noexcept { return ok(); }

  T& value() & {
    if (!ok()) throw std::get<1>(state_);
    return std::get<0>(state_);
  }
  const T& value() const& {
    if (!ok()) throw std::get<1>(state_);
    return std::get<0>(state_);
  }
  T&& value() && {
    if (!ok()) throw std::get<1>(state_);
    return std::get<0>(std::move(state_));
  }

  const FrameworkError& error() const { return std::get<1>(state_); }

 private:
  std::variant<T, FrameworkError> state_;
};

}  // namespace iotmesh
