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

#include "iotmesh/assembler/invoker.hpp"

#include <mutex>

#include "iotmesh/codec/codec.hpp"

namespace iotmesh {

namespace {

struct CallState {
  std::mutex mu;
  bool finished = false;
  bool timed_out = false;
  bool late_reply_seen = false;
  Scheduler::TimerId timer = 0;
  ServiceInvoker::Done done;
};

}  // namespace

ServiceInvoker::ServiceInvoker(Scheduler& scheduler, ServiceTransport& transport, Monitor* monitor,
                               const DeviceKeys* device_keys)
    : ServiceInvoker(scheduler, transport, monitor, device_keys, Options{}) {}

ServiceInvoker::ServiceInvoker(Scheduler& scheduler, ServiceTransport& transport, Monitor* monitor,
                               const DeviceKeys* device_keys, Options options)
    : scheduler_(scheduler),
      transport_(transport),
      monitor_(monitor),
      device_keys_(device_keys),
      options_(options) {}

Result<Message> ServiceInvoker::accept_reply(const ServiceDescriptor& target,
                                             Result<EncodedMessage> reply) {
  if (!reply.ok()) {
    FrameworkError error = reply.error();
    if (error.kind() == ErrorKind::CrashFailure && monitor_ != nullptr) {
      auto kind = monitor_->observe(target.service_id, {.connection_refused = true});
      if (kind && *kind != error.kind()) return FrameworkError(*kind, error.detail());
    }
    return error;
  }
  try {
    EncodedMessage encoded = std::move(reply).value();
    encoded.declared_capability = target.capability;
    Message message = codec::decode(encoded);
    auto token = message.headers.find(std::string(DeviceKeys::kHeader));
    const std::string presented = token == message.headers.end() ? "" : token->second;
    if (device_keys_ != nullptr && !device_keys_->verify(target.device_id, presented)) {
      if (monitor_ != nullptr) monitor_->record_fault(target.service_id, ErrorKind::UnauthorisedAccess);
      return FrameworkError(ErrorKind::UnauthorisedAccess,
                            "reply from " + target.service_id + " lacks a valid device token");
    }
    message.headers.erase(std::string(DeviceKeys::kHeader));
    return message;
  } catch (const FrameworkError& e) {
    return FrameworkError(e.kind(), "reply from " + target.service_id + ": " + e.detail());
  }
}

void ServiceInvoker::invoke(const ServiceDescriptor& target, const Message& request,
                            TimeMs deadline_at_ms, Done done) {
  std::optional<EncodedMessage> encoded;
  try {
    encoded.emplace(codec::encode(request, target.preferred_format));
    encoded->declared_capability = target.capability;
  } catch (const FrameworkError& e) {
    done(e);
    return;
  }

  auto state = std::make_shared<CallState>();
  state->done = std::move(done);
  const std::string service_id = target.service_id;

  state->timer = scheduler_.schedule_at(deadline_at_ms + 1, [this, state, service_id, deadline_at_ms] {
    Done finish;
    {
      std::lock_guard lock(state->mu);
      if (state->finished) return;
      state->finished = true;
      state->timed_out = true;
      finish = std::move(state->done);
    }
    finish(FrameworkError(ErrorKind::TimingFault, "no reply from " + service_id + " by deadline " +
                                                      std::to_string(deadline_at_ms)));
    scheduler_.schedule_after(options_.late_grace_ms, [this, state, service_id] {
      {
        std::lock_guard lock(state->mu);
        if (state->late_reply_seen) return;
      }
      if (monitor_ != nullptr) monitor_->observe(service_id, {.request_timed_out = true});
    });
  });

  transport_.call(target, std::move(*encoded),
                  [this, state, target](Result<EncodedMessage> reply) {
                    Done finish;
                    {
                      std::lock_guard lock(state->mu);
                      if (state->finished) {
                        if (state->timed_out && !state->late_reply_seen && reply.ok()) {
                          state->late_reply_seen = true;
                          if (monitor_ != nullptr) {
                            monitor_->observe(target.service_id, {.deadline_exceeded = true});
                          }
                        }
                        return;
                      }
                      state->finished = true;
                      finish = std::move(state->done);
                    }
                    scheduler_.cancel(state->timer);
                    finish(accept_reply(target, std::move(reply)));
                  });
}

}  // namespace iotmesh
