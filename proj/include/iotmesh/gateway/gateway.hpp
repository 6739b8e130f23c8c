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
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "iotmesh/assembler/assembler.hpp"
#include "iotmesh/auditor/auditor.hpp"
#include "iotmesh/core/auth.hpp"
#include "iotmesh/core/json_io.hpp"

namespace iotmesh {

inline constexpr TimeMs kDefaultDeadlineMs = 1000;

/// What a consumer agreed to: which capability it calls, the format it
/// reads, and how long it waits.
struct ConsumerContract {
  std::string consumer_id;  // empty = whoever owns the token
  Capability capability;
  WireFormat accepted_format = WireFormat::Json;
  TimeMs deadline_ms = kDefaultDeadlineMs;
  std::string auth_token;
};

/// Answers the coarse capability by fanning out to the fine-grained
/// services it was split into.
struct SplitMapping {
  Capability coarse;
  std::vector<Capability> fines;
  std::vector<MergeRule> merge;
  ExecutionMode mode = ExecutionMode::Parallel;
  Schema output_schema;

  friend bool operator==(const SplitMapping&, const SplitMapping&) = default;
};

/// ContractViolation: fewer than two fines, coarse among the fines, or bad
/// merge rules.
void check_split(const SplitMapping& mapping);
CompositeSpec split_as_composite(const SplitMapping& mapping);
Json split_to_json(const SplitMapping& mapping);
SplitMapping split_from_json(const Json& json);

struct GatewayResponse {
  Result<EncodedMessage> result;
  std::string transaction_id;
};

/// The consumer-facing API layer. Each request is authenticated, decoded,
/// routed (split mapping, then direct provider or composite, then an
/// unpromoted composite spec), checked against the output schema, and
/// re-encoded in the consumer's format. Every request yields exactly one
/// audit record.
class Gateway {
 public:
  using Done = std::function<void(GatewayResponse)>;

  Gateway(Scheduler& scheduler, Registry& registry, const Authenticator& auth,
          ServiceInvoker& invoker, Assembler& assembler, Auditor& auditor,
          Monitor* monitor = nullptr);

  /// `done` runs exactly once, at the latest one millisecond after the
  /// contract deadline.
  void handle_request(const ConsumerContract& contract, EncodedMessage payload, Done done);

  std::string authenticate(std::string_view token) const { return auth_.authenticate(token); }

  /// Replaces any mapping for the same coarse capability atomically.
  void register_split(SplitMapping mapping);
  bool remove_split(const Capability& coarse);
  std::vector<SplitMapping> splits() const;

  std::size_t in_flight() const noexcept { return in_flight_.load(); }

 private:
  struct Txn;
  using SplitTable = std::map<std::string, SplitMapping>;

  void route(const std::shared_ptr<Txn>& txn);
  void run_composite(const std::shared_ptr<Txn>& txn, const CompositeSpec& spec,
                     std::string route_name, bool count_demand);
  void call_atomic(const std::shared_ptr<Txn>& txn, ServiceDescriptor target, bool is_failover);
  void respond(const std::shared_ptr<Txn>& txn, Message output, const Schema& schema);
  void finish(const std::shared_ptr<Txn>& txn, Result<EncodedMessage> result);
  [[noreturn]] void unavailable(const Capability& capability) const;

  Scheduler& scheduler_;
  Registry& registry_;
  const Authenticator& auth_;
  ServiceInvoker& invoker_;
  Assembler& assembler_;
  Auditor& auditor_;
  Monitor* monitor_;
  IdGenerator tx_ids_{"tx-"};
  mutable std::mutex splits_mu_;
  std::shared_ptr<const SplitTable> splits_ = std::make_shared<SplitTable>();
  std::atomic<std::size_t> in_flight_{0};
};

}  // namespace iotmesh
