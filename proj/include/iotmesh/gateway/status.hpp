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

#include <optional>

#include "iotmesh/core/error.hpp"

namespace iotmesh {

/// HTTP status for a transaction outcome: 200 for success, then
/// 401 UnauthorisedAccess, 404 NotFound, 408 TimingFault and OmissionFailure,
/// 422 ContractViolation, 502 CrashFailure, 503 TransientFault.
int http_status(const std::optional<ErrorKind>& outcome) noexcept;

/// Inverse on the error statuses above; 408 maps back to TimingFault.
std::optional<ErrorKind> error_for_status(int status) noexcept;

}  // namespace iotmesh
