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

#include "iotmesh/core/auth.hpp"
#include "iotmesh/core/error.hpp"
#include "iotmesh/core/scheduler.hpp"
#include "iotmesh/core/transport.hpp"
#include "iotmesh/monitor/monitor.hpp"

namespace iotmesh {

/// Calls one provider: encodes the request in the provider's preferred
/// format, enforces the deadline, checks the reply's device token, and
/// decodes the reply back to canonical form.
///
/// A call still unanswered at deadline+1 completes with TimingFault. The
/// invoker keeps listening for `late_grace_ms` afterwards: a late reply is
/// reported to the monitor as a deadline miss, silence as a request timeout,
/// which is what separates timing faults from omission failures.
class ServiceInvoker {
 public:
  using Done = std::function<void(Result<Message>)>;

  struct Options {
    TimeMs late_grace_ms = 1000;
  };

  ServiceInvoker(Scheduler& scheduler, ServiceTransport& transport, Monitor* monitor = nullptr,
                 const DeviceKeys* device_keys = nullptr);
  ServiceInvoker(Scheduler& scheduler, ServiceTransport& transport, Monitor* monitor,
                 const DeviceKeys* device_keys, Options options);

  /// `done` runs exactly once.
  void invoke(const ServiceDescriptor& target, const Message& request, TimeMs deadline_at_ms,
              Done done);

  Scheduler& scheduler() noexcept { return scheduler_; }
  Monitor* monitor() noexcept { return monitor_; }

 private:
  Result<Message> accept_reply(const ServiceDescriptor& target, Result<EncodedMessage> reply);

  Scheduler& scheduler_;
  ServiceTransport& transport_;
  Monitor* monitor_;
  const DeviceKeys* device_keys_;
  Options options_;
};

}  // namespace iotmesh
