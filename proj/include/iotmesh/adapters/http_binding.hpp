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

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include "iotmesh/adapters/binding.hpp"
#include "iotmesh/runtime/framework.hpp"

namespace iotmesh {

/// Northbound REST-style binding (HTTP/1.1 subset).
///
///   POST /svc/<capability>     one gateway request; headers content-type,
///                              accept, x-auth-token, x-deadline-ms
///   GET  /registry             live descriptors, composites and splits
///   GET  /health/<service-id>  monitor state of one service
///   GET  /audit?after=N&wait_ms=M&limit=L
///                              committed audit records as NDJSON, long-poll
///   POST /admin/composites     register a composite spec (token required)
///   POST /admin/splits         register a split mapping (token required)
///
/// Errors carry {"error", "detail", "transaction_id"} with the status from
/// http_status().
class HttpBinding final : public Binding {
 public:
  using Dispatch =
      std::function<void(const ConsumerContract&, EncodedMessage, Gateway::Done)>;

  struct Options {
    std::string binding_id = "http";
    Endpoint endpoint;
    /// Replaces the gateway as the target of /svc requests (tests).
    Dispatch dispatch;
    /// Longest /audit long-poll a client may ask for.
    TimeMs max_wait_ms = 30000;
  };

  HttpBinding(Framework& framework, Options options);
  ~HttpBinding() override;

  const std::string& binding_id() const noexcept override { return options_.binding_id; }
  Protocol protocol() const noexcept override { return Protocol::RequestWire; }
  Lifecycle start() override;
  Lifecycle stop() override;
  Lifecycle state() const override;
  Endpoint endpoint() const override;

  /// Requests currently being answered.
  std::size_t in_flight() const noexcept { return in_flight_.load(); }

 private:
  struct Server;

  Framework& fw_;
  Options options_;
  mutable std::mutex mu_;
  std::unique_ptr<Server> server_;
  std::thread thread_;
  int bound_port_ = 0;
  std::atomic<std::size_t> in_flight_{0};
};

}  // namespace iotmesh
