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

#include "iotmesh/assembler/assembler.hpp"

#include <algorithm>

namespace iotmesh {

struct Assembler::Run {
  Run(ExecutionPlan p, Message r, Done d)
      : plan(std::move(p)), request(std::move(r)), done(std::move(d)) {}

  std::mutex mu;
  ExecutionPlan plan;
  Message request;
  std::string correlation_id;
  Done done;
  std::vector<Value> outputs;
  std::vector<Hop> hops;
  std::size_t remaining = 0;
  bool finished = false;
};

Value merge_outputs(const CompositeSpec& spec, const std::vector<Value>& bodies) {
  Value::Map merged;
  for (const MergeRule& rule : spec.merge) {
    const Value& body = bodies.at(rule.member);
    const Value* field = body.is_map() ? body.find(rule.from) : nullptr;
    if (field == nullptr) {
      throw_error(ErrorKind::ContractViolation, "member " + spec.members[rule.member].str() +
                                                    " output lacks field '" + rule.from + "'");
    }
    merged.insert_or_assign(rule.to, *field);
  }
  Value result(std::move(merged));
  auto violations = validate(result, spec.output_schema);
  if (!violations.empty()) {
    throw_error(ErrorKind::ContractViolation, "composite " + spec.capability.str() + " output: " +
                                                  violations.front().field + ": " +
                                                  violations.front().reason);
  }
  return result;
}

Assembler::Assembler(Registry& registry, ServiceInvoker& invoker)
    : Assembler(registry, invoker, Options{}) {}

Assembler::Assembler(Registry& registry, ServiceInvoker& invoker, Options options)
    : registry_(registry), invoker_(invoker), options_(options) {
  if (options_.demand_window_ms <= 0 || options_.promotion_threshold == 0) {
    throw_error(ErrorKind::ContractViolation, "promotion window and threshold must be positive");
  }
}

Assembler::~Assembler() = default;

std::string Assembler::promoted_service_id(const Capability& capability) {
  return "composite/" + capability.str();
}

ExecutionPlan Assembler::plan(const CompositeSpec& spec, TimeMs deadline_at_ms) const {
  check_composite(spec);
  ExecutionPlan plan{.spec = spec, .deadline_at_ms = deadline_at_ms};
  Monitor* monitor = invoker_.monitor();
  for (const Capability& member : spec.members) {
    std::optional<ServiceDescriptor> up;
    std::optional<ServiceDescriptor> admitted;
    for (ServiceDescriptor& d : registry_.discover(member)) {
      if (d.granularity != Granularity::Atomic) continue;
      if (monitor != nullptr && !monitor->admits(d.service_id)) continue;
      auto health = monitor ? monitor->health(d.service_id) : std::nullopt;
      if (!health || health->status == HealthStatus::Up) {
        up = std::move(d);
        break;
      }
      if (!admitted) admitted = std::move(d);
    }
    if (!up && !admitted) {
      throw_error(ErrorKind::NotFound, "no live provider for member " + member.str() +
                                           " of " + spec.capability.str());
    }
    plan.resolved.push_back(up ? std::move(*up) : std::move(*admitted));
  }
  return plan;
}

void Assembler::execute(const ExecutionPlan& plan, const Message& request, Done done) {
  auto run = std::make_shared<Run>(plan, request, std::move(done));
  run->correlation_id = request.correlation_id.value_or(request.message_id);
  run->outputs.assign(plan.resolved.size(), Value());
  run->remaining = plan.resolved.size();
  if (plan.spec.mode == ExecutionMode::Parallel) {
    for (std::size_t i = 0; i < plan.resolved.size(); ++i) start_member(run, i, request.body);
  } else {
    start_member(run, 0, request.body);
  }
}

void Assembler::start_member(const std::shared_ptr<Run>& run, std::size_t index,
                             const Value& input) {
  call_member(run, index, run->plan.resolved[index], input, false);
}

void Assembler::call_member(const std::shared_ptr<Run>& run, std::size_t index,
                            ServiceDescriptor target, const Value& input, bool is_failover) {
  Scheduler& clock = invoker_.scheduler();
  Message member_request{
      .message_id = run->request.message_id + "-m" + std::to_string(index) + (is_failover ? "f" : ""),
      .correlation_id = run->correlation_id,
      .capability = target.capability,
      .timestamp_ms = clock.now(),
      .headers = run->request.headers,
      .body = input};
  const TimeMs started = clock.now();
  const TimeMs deadline = run->plan.deadline_at_ms;
  invoker_.invoke(
      target, member_request, deadline,
      [this, run, index, target, input, is_failover, started, deadline](Result<Message> reply) {
        Scheduler& clock = invoker_.scheduler();
        const TimeMs now = clock.now();
        {
          std::lock_guard lock(run->mu);
          run->hops.push_back(Hop{.service_id = target.service_id,
                                  .capability = target.capability,
                                  .start_ms = started,
                                  .end_ms = now,
                                  .outcome = reply.ok() ? std::nullopt
                                                        : std::optional(reply.error().kind())});
          if (run->finished) return;
        }
        if (reply.ok()) {
          member_done(run, index, std::move(reply).value());
          return;
        }
        const FrameworkError& error = reply.error();
        if (!is_failover && error.kind() != ErrorKind::TimingFault && now <= deadline) {
          Monitor* monitor = invoker_.monitor();
          try {
            ServiceDescriptor next = registry_.resolve_equivalent(
                target.service_id, [monitor](const ServiceDescriptor& d) {
                  return d.granularity != Granularity::Atomic ||
                         (monitor != nullptr && !monitor->admits(d.service_id));
                });
            call_member(run, index, std::move(next), input, true);
            return;
          } catch (const FrameworkError& e) {
            if (e.kind() != ErrorKind::NotFound) throw;
          }
        }
        fail(run, error);
      });
}

void Assembler::member_done(const std::shared_ptr<Run>& run, std::size_t index, Message output) {
  bool complete = false;
  std::optional<Value> next_input;
  {
    std::lock_guard lock(run->mu);
    if (run->finished) return;
    run->outputs[index] = output.body;
    --run->remaining;
    if (run->plan.spec.mode == ExecutionMode::Parallel) {
      complete = run->remaining == 0;
    } else if (index + 1 < run->plan.resolved.size()) {
      next_input = std::move(output.body);
    } else {
      complete = true;
    }
  }
  if (next_input) {
    start_member(run, index + 1, *next_input);
  } else if (complete) {
    finish(run);
  }
}

void Assembler::fail(const std::shared_ptr<Run>& run, FrameworkError error) {
  std::vector<Hop> hops;
  {
    std::lock_guard lock(run->mu);
    if (run->finished) return;
    run->finished = true;
    hops = run->hops;
  }
  run->done(AssemblyOutcome{std::move(error), std::move(hops)});
}

void Assembler::finish(const std::shared_ptr<Run>& run) {
  std::vector<Hop> hops;
  std::vector<Value> outputs;
  {
    std::lock_guard lock(run->mu);
    if (run->finished) return;
    run->finished = true;
    hops = run->hops;
    outputs = run->outputs;
  }
  try {
    Message response{.message_id = run->request.message_id,
                     .correlation_id = run->correlation_id,
                     .capability = run->plan.spec.capability,
                     .timestamp_ms = invoker_.scheduler().now(),
                     .body = merge_outputs(run->plan.spec, outputs)};
    run->done(AssemblyOutcome{std::move(response), std::move(hops)});
  } catch (const FrameworkError& e) {
    run->done(AssemblyOutcome{e, std::move(hops)});
  }
}

DemandCounter Assembler::record_demand(const std::string& signature) {
  const TimeMs now = invoker_.scheduler().now();
  std::lock_guard lock(mu_);
  auto& times = demand_[signature];
  times.push_back(now);
  while (!times.empty() && times.front() <= now - options_.demand_window_ms) times.pop_front();
  return DemandCounter{signature, times.size(), options_.demand_window_ms,
                       options_.promotion_threshold};
}

DemandCounter Assembler::demand(const std::string& signature) const {
  const TimeMs now = invoker_.scheduler().now();
  std::lock_guard lock(mu_);
  std::size_t count = 0;
  if (auto it = demand_.find(signature); it != demand_.end()) {
    count = static_cast<std::size_t>(std::count_if(
        it->second.begin(), it->second.end(),
        [&](TimeMs t) { return t > now - options_.demand_window_ms; }));
  }
  return DemandCounter{signature, count, options_.demand_window_ms, options_.promotion_threshold};
}

std::optional<ServiceDescriptor> Assembler::maybe_promote(const DemandCounter& counter,
                                                          const CompositeSpec& spec) {
  if (!counter.promotable()) return std::nullopt;
  check_composite(spec);
  const std::string id = promoted_service_id(spec.capability);
  std::lock_guard lock(mu_);
  if (registry_.entry(id)) return std::nullopt;
  if (!registry_.composite(spec.capability)) registry_.register_composite(spec);

  TimeMs cost = 0;
  for (const Capability& member : spec.members) {
    auto providers = registry_.discover(member);
    const TimeMs member_cost = providers.empty() ? 0 : providers.front().cost_hint_ms;
    cost = spec.mode == ExecutionMode::Parallel ? std::max(cost, member_cost) : cost + member_cost;
  }
  ServiceDescriptor descriptor{.service_id = id,
                               .capability = spec.capability,
                               .service_class = ServiceClass::Functional,
                               .device_id = std::string(kPromotedDevice),
                               .domain = std::string(kPromotedDevice),
                               .output_schema = spec.output_schema,
                               .preferred_format = WireFormat::Json,
                               .granularity = Granularity::Composite,
                               .cost_hint_ms = cost,
                               .lease_ttl_ms = options_.promoted_lease_ttl_ms};
  promoted_[id] = registry_.register_service(descriptor);
  return descriptor;
}

void Assembler::renew_promotions() {
  std::lock_guard lock(mu_);
  for (auto& [id, lease] : promoted_) {
    try {
      lease = registry_.renew(lease);
    } catch (const FrameworkError& e) {
      if (e.kind() != ErrorKind::NotFound) throw;
      if (auto known = registry_.last_known(id)) {
        try {
          lease = registry_.register_service(*known);
        } catch (const FrameworkError&) {
          // Registered again by someone else in the meantime.
        }
      }
    }
  }
}

}  // namespace iotmesh
