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

#include "iotmesh/core/error.hpp"

namespace iotmesh {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::UnauthorisedAccess: return "UnauthorisedAccess";
    case ErrorKind::CrashFailure: return "CrashFailure";
    case ErrorKind::OmissionFailure: return "OmissionFailure";
    case ErrorKind::TimingFault: return "TimingFault";
    case ErrorKind::TransientFault: return "TransientFault";
    case ErrorKind::ContractViolation: return "ContractViolation";
    case ErrorKind::NotFound: return "NotFound";
  }
  return "ContractViolation";
}

std::optional<ErrorKind> parse_error_kind(std::string_view text) noexcept {
  for (ErrorKind kind : kAllErrorKinds) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

namespace {
std::string compose_what(ErrorKind kind, const std::string& detail) {
  std::string out(to_string(kind));
  if (!detail.empty()) {
    out += ": ";
    out += detail;
  }
  return out;
}
}  // namespace

FrameworkError::FrameworkError(ErrorKind kind, std::string detail,
                               std::optional<std::string> transaction_id)
    : std::runtime_error(compose_what(kind, detail)),
      kind_(kind),
      detail_(std::move(detail)),
      transaction_id_(std::move(transaction_id)) {}

FrameworkError FrameworkError::with_transaction(std::string transaction_id) const {
  return FrameworkError(kind_, detail_, std::move(transaction_id));
}

void throw_error(ErrorKind kind, std::string detail) {
  throw FrameworkError(kind, std::move(detail));
}

}  // namespace iotmesh
