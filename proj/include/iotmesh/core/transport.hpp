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

#include <functional>

#include "iotmesh/core/descriptor.hpp"
#include "iotmesh/core/error.hpp"
#include "iotmesh/core/message.hpp"

namespace iotmesh {

struct PingResult {
  bool ok = false;
  bool connection_refused = false;
};

/// How the framework reaches a provider. Implementations own the device side
/// (the simulated fleet, or a network client).
class ServiceTransport {
 public:
  using ReplyHandler = std::function<void(Result<EncodedMessage>)>;

  virtual ~ServiceTransport() = default;

  /// Sends `request` to `target`. `on_reply` runs at most once, possibly
  /// never (a provider that swallows requests). A refused connection is
  /// reported as CrashFailure.
  virtual void call(const ServiceDescriptor& target, EncodedMessage request,
                    ReplyHandler on_reply) = 0;

  /// Liveness check; answers immediately.
  virtual PingResult ping(const ServiceDescriptor& target) = 0;
};

}  // namespace iotmesh
