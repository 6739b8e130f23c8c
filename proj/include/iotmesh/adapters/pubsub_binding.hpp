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

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "iotmesh/adapters/binding.hpp"
#include "iotmesh/bus/event_bus.hpp"
#include "iotmesh/core/json_io.hpp"

namespace iotmesh {

/// Protocol state of one pub/sub connection, independent of the socket.
///
/// Frames are single-line JSON objects. Inbound ops:
///   {"op":"pub","topic":T,"payload":B[,"capability":C][,"id":I][,"headers":H][,"ref":R]}
///   {"op":"sub","pattern":P[,"ack":"manual"|"auto"][,"ref":R]}
///   {"op":"ack","subscription":S,"delivery_id":D[,"ref":R]}
/// Every inbound line yields exactly one "ok" or "err" frame; deliveries
/// arrive as "evt" frames.
class PubSubSession {
 public:
  struct Options {
    /// Outbound frames allowed to wait for the writer. Replies to inbound
    /// frames may exceed it so that every line is answered; an "evt" that
    /// finds the queue full is refused, and the bus redelivers it later.
    std::size_t max_queue = 256;
    std::size_t max_line_bytes = 64 * 1024;
  };

  PubSubSession(EventBus& bus, const Clock& clock, std::string session_id, Options options);
  PubSubSession(EventBus& bus, const Clock& clock, std::string session_id);
  ~PubSubSession();
  PubSubSession(const PubSubSession&) = delete;
  PubSubSession& operator=(const PubSubSession&) = delete;

  /// Handles one line (without its terminator).
  void handle_line(std::string_view line);

  /// Takes every queued outbound frame (each without a terminator).
  std::vector<std::string> take_output();
  /// Waits until output is queued or close() is called; false when closed
  /// with nothing left.
  bool wait_output(std::vector<std::string>& out);
  /// Cancels subscriptions and wakes a waiting writer.
  void close();

  std::size_t subscriptions() const;

 private:
  // Queue shared with bus handlers, which may outlive the session briefly.
  struct State;

  Json handle(const Json& frame);

  EventBus& bus_;
  const Clock& clock_;
  const std::string id_;
  std::shared_ptr<State> state_;
  std::uint64_t published_ = 0;
  mutable std::mutex subs_mu_;
  std::map<SubscriptionId, Subscription> subs_;
};

/// Southbound pub/sub binding: newline-delimited JSON frames over TCP, one
/// PubSubSession per connection.
class PubSubBinding final : public Binding {
 public:
  struct Options {
    std::string binding_id = "pubsub";
    Endpoint endpoint;
    PubSubSession::Options session;
  };

  PubSubBinding(EventBus& bus, const Clock& clock, Options options);
  ~PubSubBinding() override;

  const std::string& binding_id() const noexcept override { return options_.binding_id; }
  Protocol protocol() const noexcept override { return Protocol::PubSubWire; }
  Lifecycle start() override;
  Lifecycle stop() override;
  Lifecycle state() const override;
  Endpoint endpoint() const override;

  std::size_t connections() const;

 private:
  struct Connection;
  void accept_loop();
  void serve(const std::shared_ptr<Connection>& conn);

  EventBus& bus_;
  const Clock& clock_;
  Options options_;
  mutable std::mutex mu_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  int bound_port_ = 0;
  bool running_ = false;
  std::thread acceptor_;
  std::uint64_t next_conn_ = 0;
  std::vector<std::shared_ptr<Connection>> conns_;
};

}  // namespace iotmesh
