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

#include "iotmesh/gateway/status.hpp"

namespace iotmesh {

int http_status(const std::optional<ErrorKind>& outcome) noexcept {
  if (!outcome) return 200;
  switch (*outcome) {
    case ErrorKind::UnauthorisedAccess: return 401;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::TimingFault:
    case ErrorKind::OmissionFailure: return 408;
    case ErrorKind::ContractViolation: return 422;
    case ErrorKind::CrashFailure: return 502;
    case ErrorKind::TransientFault: return 503;
  }
  return 500;
}

std::optional<ErrorKind> error_for_status(int status) noexcept {
  switch (status) {
    case 401: return ErrorKind::UnauthorisedAccess;
    case 404: return ErrorKind::NotFound;
    case 408: return ErrorKind::TimingFault;
    case 422: return ErrorKind::ContractViolation;
    case 502: return ErrorKind::CrashFailure;
    case 503: return ErrorKind::TransientFault;
    default: return std::nullopt;
  }
}

}  // namespace iotmesh
