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

#include <memory>
#include <string>
#include <vector>

#include "iotmesh/core/error.hpp"

namespace iotmesh {

enum class Protocol { PubSubWire, RequestWire };
enum class Lifecycle { Stopped, Running };

std::string_view to_string(Protocol protocol) noexcept;
std::string_view to_string(Lifecycle state) noexcept;

struct Endpoint {
  std::string host = "127.0.0.1";
  /// 0 picks a free port at start().
  int port = 0;
};

/// One wire protocol bridged into the framework. start() and stop() are
/// idempotent; stop() lets in-flight work finish before closing.
class Binding {
 public:
  virtual ~Binding() = default;

  virtual const std::string& binding_id() const noexcept = 0;
  virtual Protocol protocol() const noexcept = 0;
  /// Throws ContractViolation when the endpoint cannot be bound.
  virtual Lifecycle start() = 0;
  virtual Lifecycle stop() = 0;
  virtual Lifecycle state() const = 0;
  /// The configured endpoint, with the actual port once running.
  virtual Endpoint endpoint() const = 0;
};

/// At most one binding per protocol.
class BindingSet {
 public:
  /// Throws ContractViolation when a binding for the same protocol exists.
  Binding& add(std::unique_ptr<Binding> binding);
  Binding* find(Protocol protocol) const;

  /// Starts in insertion order; on failure stops the ones already started
  /// and rethrows.
  void start_all();
  /// Stops in reverse insertion order.
  void stop_all();
  std::size_t size() const noexcept { return bindings_.size(); }

 private:
  std::vector<std::unique_ptr<Binding>> bindings_;
};

}  // namespace iotmesh
