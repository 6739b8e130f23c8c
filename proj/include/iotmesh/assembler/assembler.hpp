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

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iotmesh/assembler/invoker.hpp"
#include "iotmesh/auditor/auditor.hpp"
#include "iotmesh/core/composite.hpp"
#include "iotmesh/registry/registry.hpp"

namespace iotmesh {

struct ExecutionPlan {
  CompositeSpec spec;
  std::vector<ServiceDescriptor> resolved;  // one per member
  TimeMs deadline_at_ms = 0;               // absolute
};

struct DemandCounter {
  std::string signature;
  std::size_t count = 0;
  TimeMs window_ms = 0;
  std::size_t threshold = 0;

  bool promotable() const noexcept { return count >= threshold; }
};

/// Completion of a composite execution. `hops` lists every member call in
/// the order it finished, including failed attempts that were failed over.
struct AssemblyOutcome {
  Result<Message> result;
  std::vector<Hop> hops;
};

/// Plans and runs composite requests over fine-grained member services and
/// promotes popular combinations to discoverable composite services.
class Assembler {
 public:
  struct Options {
    TimeMs demand_window_ms = 60'000;
    std::size_t promotion_threshold = 10;
    TimeMs promoted_lease_ttl_ms = kDefaultLeaseTtlMs;
  };
  using Done = std::function<void(AssemblyOutcome)>;

  static constexpr std::string_view kPromotedDevice = "assembler";

  Assembler(Registry& registry, ServiceInvoker& invoker);
  Assembler(Registry& registry, ServiceInvoker& invoker, Options options);
  ~Assembler();
  Assembler(const Assembler&) = delete;
  Assembler& operator=(const Assembler&) = delete;

  /// Resolves each member to its cheapest live provider, preferring ones the
  /// monitor reports Up. Throws ContractViolation for an invalid spec and
  /// NotFound naming the first member without a provider.
  ExecutionPlan plan(const CompositeSpec& spec, TimeMs deadline_at_ms) const;

  /// Parallel mode issues every member call at once; Chained mode feeds each
  /// member's output body to the next member. A failing member gets one
  /// failover to an equivalent provider. `done` runs exactly once.
  void execute(const ExecutionPlan& plan, const Message& request, Done done);

  DemandCounter record_demand(const std::string& signature);
  DemandCounter demand(const std::string& signature) const;

  /// Registers "composite/<capability>" once the counter is promotable and no
  /// such service is live. Returns the new descriptor, or nullopt.
  std::optional<ServiceDescriptor> maybe_promote(const DemandCounter& counter,
                                                 const CompositeSpec& spec);

  /// Renews the leases of promoted composites; the runtime calls this
  /// periodically.
  void renew_promotions();

  static std::string promoted_service_id(const Capability& capability);

 private:
  struct Run;
  void start_member(const std::shared_ptr<Run>& run, std::size_t index, const Value& input);
  void call_member(const std::shared_ptr<Run>& run, std::size_t index, ServiceDescriptor target,
                   const Value& input, bool is_failover);
  void member_done(const std::shared_ptr<Run>& run, std::size_t index, Message output);
  void fail(const std::shared_ptr<Run>& run, FrameworkError error);
  void finish(const std::shared_ptr<Run>& run);

  Registry& registry_;
  ServiceInvoker& invoker_;
  const Options options_;
  mutable std::mutex mu_;
  std::map<std::string, std::deque<TimeMs>> demand_;
  std::map<std::string, Lease> promoted_;
};

/// Body built from the merge rules only. Throws ContractViolation when a
/// member output lacks a mapped field or the result breaks `spec.output_schema`.
Value merge_outputs(const CompositeSpec& spec, const std::vector<Value>& member_bodies);

}  // namespace iotmesh
