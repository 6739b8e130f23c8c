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

#include "iotmesh/gateway/gateway.hpp"

#include <algorithm>

#include "iotmesh/codec/codec.hpp"

namespace iotmesh {

void check_split(const SplitMapping& m) {
  if (m.fines.size() < 2) {
    throw_error(ErrorKind::ContractViolation,
                "split of " + m.coarse.str() + " needs at least two fine services");
  }
  if (std::find(m.fines.begin(), m.fines.end(), m.coarse) != m.fines.end()) {
    throw_error(ErrorKind::ContractViolation,
                "split of " + m.coarse.str() + " lists itself as a fine service");
  }
  check_composite(split_as_composite(m));
}

CompositeSpec split_as_composite(const SplitMapping& m) {
  return CompositeSpec{.capability = m.coarse,
                       .members = m.fines,
                       .merge = m.merge,
                       .mode = m.mode,
                       .output_schema = m.output_schema};
}

Json split_to_json(const SplitMapping& m) {
  Json fines = Json::array();
  for (const auto& f : m.fines) fines.push_back(f.str());
  return Json{{"coarse", m.coarse.str()},
              {"fines", fines},
              {"merge", merge_rules_to_json(m.merge)},
              {"mode", std::string(to_string(m.mode))},
              {"schema", schema_to_json(m.output_schema)}};
}

SplitMapping split_from_json(const Json& json) {
  json_field::reject_unknown(json, {"coarse", "fines", "merge", "mode", "schema"}, "split mapping");
  const Json& fines = json_field::require(json, "fines");
  if (!fines.is_array()) throw_error(ErrorKind::ContractViolation, "split mapping: fines must be an array");
  std::vector<Capability> caps;
  for (const auto& f : fines) {
    if (!f.is_string()) throw_error(ErrorKind::ContractViolation, "split mapping: fine must be a string");
    caps.push_back(Capability::parse(f.get<std::string>()));
  }
  auto mode = parse_execution_mode(json_field::string_or(json, "mode", "parallel"));
  if (!mode) throw_error(ErrorKind::ContractViolation, "split mapping: unknown mode");
  SplitMapping m{.coarse = Capability::parse(json_field::string(json, "coarse")),
                 .fines = std::move(caps),
                 .merge = merge_rules_from_json(json.value("merge", Json::array())),
                 .mode = *mode,
                 .output_schema = schema_from_json(json.value("schema", Json()))};
  check_split(m);
  return m;
}

struct Gateway::Txn {
  Txn(ConsumerContract c, Done d, std::string id, TimeMs start)
      : contract(std::move(c)), done(std::move(d)), tx(std::move(id)), started(start) {}

  ConsumerContract contract;
  Done done;
  const std::string tx;
  const TimeMs started;
  TimeMs deadline_at = 0;
  std::string consumer_id;
  std::optional<Message> request;

  std::mutex mu;
  std::string route = "none";
  bool finished = false;
  std::vector<Hop> hops;
  Scheduler::TimerId timer = 0;
};

Gateway::Gateway(Scheduler& scheduler, Registry& registry, const Authenticator& auth,
                 ServiceInvoker& invoker, Assembler& assembler, Auditor& auditor,
                 Monitor* monitor)
    : scheduler_(scheduler),
      registry_(registry),
      auth_(auth),
      invoker_(invoker),
      assembler_(assembler),
      auditor_(auditor),
      monitor_(monitor) {}

void Gateway::register_split(SplitMapping mapping) {
  check_split(mapping);
  std::lock_guard lock(splits_mu_);
  auto next = std::make_shared<SplitTable>(*splits_);
  const std::string key = mapping.coarse.str();
  next->insert_or_assign(key, std::move(mapping));
  splits_ = std::move(next);
}

bool Gateway::remove_split(const Capability& coarse) {
  std::lock_guard lock(splits_mu_);
  if (splits_->count(coarse.str()) == 0) return false;
  auto next = std::make_shared<SplitTable>(*splits_);
  next->erase(coarse.str());
  splits_ = std::move(next);
  return true;
}

std::vector<SplitMapping> Gateway::splits() const {
  std::shared_ptr<const SplitTable> table;
  {
    std::lock_guard lock(splits_mu_);
    table = splits_;
  }
  std::vector<SplitMapping> out;
  for (const auto& [key, m] : *table) out.push_back(m);
  return out;
}

void Gateway::handle_request(const ConsumerContract& contract, EncodedMessage payload, Done done) {
  ++in_flight_;
  auto txn = std::make_shared<Txn>(contract, std::move(done), tx_ids_.next(), scheduler_.now());
  try {
    txn->consumer_id = auth_.authenticate(contract.auth_token);
    if (!contract.consumer_id.empty() && contract.consumer_id != txn->consumer_id) {
      throw_error(ErrorKind::UnauthorisedAccess,
                  "token does not belong to consumer " + contract.consumer_id);
    }
    if (contract.deadline_ms <= 0) {
      throw_error(ErrorKind::ContractViolation, "contract deadline must be positive");
    }
    payload.declared_capability = contract.capability;
    txn->request = codec::decode(payload);
  } catch (const FrameworkError& e) {
    finish(txn, e);
    return;
  }

  txn->deadline_at = txn->started + contract.deadline_ms;
  {
    std::lock_guard lock(txn->mu);
    txn->timer = scheduler_.schedule_at(txn->deadline_at + 1, [this, txn] {
      finish(txn, FrameworkError(ErrorKind::TimingFault,
                                 "deadline of " + std::to_string(txn->contract.deadline_ms) +
                                     " ms exceeded"));
    });
  }
  try {
    route(txn);
  } catch (const FrameworkError& e) {
    finish(txn, e);
  }
}

void Gateway::route(const std::shared_ptr<Txn>& txn) {
  const Capability& capability = txn->contract.capability;

  std::shared_ptr<const SplitTable> table;
  {
    std::lock_guard lock(splits_mu_);
    table = splits_;
  }
  if (auto it = table->find(capability.str()); it != table->end()) {
    run_composite(txn, split_as_composite(it->second), "split", false);
    return;
  }

  std::optional<ServiceDescriptor> up;
  std::optional<ServiceDescriptor> admitted;
  for (ServiceDescriptor& d : registry_.discover(capability)) {
    if (monitor_ != nullptr && !monitor_->admits(d.service_id)) continue;
    auto health = monitor_ ? monitor_->health(d.service_id) : std::nullopt;
    if (!health || health->status == HealthStatus::Up) {
      up = std::move(d);
      break;
    }
    if (!admitted) admitted = std::move(d);
  }
  if (!up) up = std::move(admitted);
  if (up && up->granularity == Granularity::Atomic) {
    {
      std::lock_guard lock(txn->mu);
      txn->route = "atomic";
    }
    call_atomic(txn, std::move(*up), false);
    return;
  }
  if (auto spec = registry_.composite(capability)) {
    run_composite(txn, *spec, "composite", true);
    return;
  }
  unavailable(capability);
}

void Gateway::unavailable(const Capability& capability) const {
  auto suspended = registry_.suspended_providers(capability);
  if (suspended.empty()) throw_error(ErrorKind::NotFound, "no provider for " + capability.str());
  const std::string& id = suspended.front().service_id;
  std::optional<ErrorKind> kind = monitor_ ? monitor_->classification(id) : std::nullopt;
  if (!kind || *kind == ErrorKind::NotFound) kind = ErrorKind::CrashFailure;
  throw_error(*kind, "every provider of " + capability.str() + " is out of service (" + id + ")");
}

void Gateway::run_composite(const std::shared_ptr<Txn>& txn, const CompositeSpec& spec,
                            std::string route_name, bool count_demand) {
  ExecutionPlan plan = assembler_.plan(spec, txn->deadline_at);
  if (count_demand) {
    DemandCounter counter = assembler_.record_demand(demand_signature(spec.members));
    assembler_.maybe_promote(counter, spec);
  }
  {
    std::lock_guard lock(txn->mu);
    txn->route = std::move(route_name);
  }
  Message request = *txn->request;
  request.correlation_id = request.message_id;
  assembler_.execute(plan, request, [this, txn, schema = spec.output_schema](AssemblyOutcome o) {
    {
      std::lock_guard lock(txn->mu);
      if (txn->finished) return;
      txn->hops.insert(txn->hops.end(), o.hops.begin(), o.hops.end());
    }
    if (!o.result.ok()) {
      finish(txn, o.result.error());
    } else {
      respond(txn, std::move(o.result).value(), schema);
    }
  });
}

void Gateway::call_atomic(const std::shared_ptr<Txn>& txn, ServiceDescriptor target,
                          bool is_failover) {
  Message request = *txn->request;
  request.correlation_id = request.message_id;
  const TimeMs started = scheduler_.now();
  invoker_.invoke(target, request, txn->deadline_at,
                  [this, txn, target, is_failover, started](Result<Message> reply) {
    const TimeMs now = scheduler_.now();
    {
      std::lock_guard lock(txn->mu);
      if (txn->finished) return;
      txn->hops.push_back(Hop{.service_id = target.service_id,
                              .capability = target.capability,
                              .start_ms = started,
                              .end_ms = now,
                              .outcome = reply.ok() ? std::nullopt
                                                    : std::optional(reply.error().kind())});
    }
    if (reply.ok()) {
      respond(txn, std::move(reply).value(), target.output_schema);
      return;
    }
    const FrameworkError& error = reply.error();
    if (!is_failover && error.kind() != ErrorKind::TimingFault && now <= txn->deadline_at) {
      try {
        ServiceDescriptor next = registry_.resolve_equivalent(
            target.service_id, [this](const ServiceDescriptor& d) {
              return d.granularity != Granularity::Atomic ||
                     (monitor_ != nullptr && !monitor_->admits(d.service_id));
            });
        call_atomic(txn, std::move(next), true);
        return;
      } catch (const FrameworkError& e) {
        if (e.kind() != ErrorKind::NotFound) {
          finish(txn, e);
          return;
        }
      }
    }
    finish(txn, error);
  });
}

void Gateway::respond(const std::shared_ptr<Txn>& txn, Message output, const Schema& schema) {
  auto violations = validate(output.body, schema);
  if (!violations.empty()) {
    finish(txn, FrameworkError(ErrorKind::ContractViolation,
                               "response breaks output schema: " + violations.front().field +
                                   ": " + violations.front().reason));
    return;
  }
  Message response{.message_id = txn->tx,
                   .correlation_id = txn->request->message_id,
                   .capability = txn->contract.capability,
                   .timestamp_ms = scheduler_.now(),
                   .headers = {{"x-transaction-id", txn->tx}},
                   .body = std::move(output.body)};
  try {
    finish(txn, codec::encode(response, txn->contract.accepted_format));
  } catch (const FrameworkError& e) {
    finish(txn, e);
  }
}

void Gateway::finish(const std::shared_ptr<Txn>& txn, Result<EncodedMessage> result) {
  std::vector<Hop> hops;
  std::string route_name;
  {
    std::lock_guard lock(txn->mu);
    if (txn->finished) return;
    txn->finished = true;
    hops = txn->hops;
    route_name = txn->route;
    if (txn->timer != 0) scheduler_.cancel(txn->timer);
  }
  const TimeMs now = scheduler_.now();
  AuditRecord record{
      .transaction_id = txn->tx,
      .correlation_id = txn->request ? std::optional(txn->request->message_id) : std::nullopt,
      .capability = txn->contract.capability,
      .consumer_id = txn->consumer_id,
      .route = std::move(route_name),
      .started_ms = txn->started,
      .total_ms = now - txn->started,
      .hops = std::move(hops),
      .final_outcome = result.ok() ? std::nullopt : std::optional(result.error().kind())};
  auditor_.append(std::move(record));

  if (!result.ok()) result = result.error().with_transaction(txn->tx);
  Done done = std::move(txn->done);
  done(GatewayResponse{std::move(result), txn->tx});
  --in_flight_;
}

}  // namespace iotmesh
