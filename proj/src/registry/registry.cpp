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

#include "iotmesh/registry/registry.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unistd.h>

#include "iotmesh/core/error.hpp"

namespace iotmesh {

namespace {

bool cheaper(const ServiceDescriptor& a, const ServiceDescriptor& b) {
  if (a.cost_hint_ms != b.cost_hint_ms) return a.cost_hint_ms < b.cost_hint_ms;
  return a.service_id < b.service_id;
}

[[noreturn]] void not_found(std::string detail) {
  throw FrameworkError(ErrorKind::NotFound, std::move(detail));
}

[[noreturn]] void violation(std::string detail) {
  throw FrameworkError(ErrorKind::ContractViolation, std::move(detail));
}

}  // namespace

Lease Registry::register_service(ServiceDescriptor descriptor) {
  check_descriptor(descriptor);
  std::unique_lock lock(mu_);
  if (descriptor.granularity == Granularity::Composite &&
      !composites_.contains(descriptor.capability.str())) {
    violation("composite descriptor " + descriptor.service_id +
              " has no registered composite spec for " + descriptor.capability.str());
  }
  const TimeMs now = clock_.now();
  auto it = slots_.find(descriptor.service_id);
  std::uint64_t epoch = 1;
  if (it != slots_.end()) {
    if (live(it->second, now)) {
      violation("service_id " + descriptor.service_id + " already registered with a live lease");
    }
    epoch = it->second.lease.epoch + 1;
  }
  Lease lease{descriptor.service_id, now + descriptor.lease_ttl_ms, epoch};
  slots_.insert_or_assign(lease.service_id, Slot{std::move(descriptor), lease, true, false});
  return lease;
}

Lease Registry::renew(const Lease& lease) {
  std::unique_lock lock(mu_);
  const TimeMs now = clock_.now();
  auto it = slots_.find(lease.service_id);
  if (it == slots_.end() || !live(it->second, now)) {
    not_found("no live lease for " + lease.service_id);
  }
  if (it->second.lease.epoch != lease.epoch) {
    not_found("lease epoch " + std::to_string(lease.epoch) + " for " + lease.service_id +
              " is stale");
  }
  it->second.lease.expires_at_ms = now + it->second.descriptor.lease_ttl_ms;
  return it->second.lease;
}

void Registry::deregister(const std::string& service_id) {
  std::unique_lock lock(mu_);
  auto it = slots_.find(service_id);
  if (it == slots_.end()) return;
  it->second.registered = false;
  it->second.suspended = false;
}

std::vector<ServiceDescriptor> Registry::discover(const Capability& capability,
                                                  const std::optional<std::string>& domain,
                                                  bool expose_nonfunctional) const {
  std::shared_lock lock(mu_);
  const TimeMs now = clock_.now();
  std::vector<ServiceDescriptor> out;
  for (const auto& [_, slot] : slots_) {
    const auto& d = slot.descriptor;
    if (!live(slot, now) || slot.suspended || d.capability != capability) continue;
    if (domain && d.domain != *domain) continue;
    if (d.service_class == ServiceClass::NonFunctional && !expose_nonfunctional) continue;
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(), cheaper);
  return out;
}

ServiceDescriptor Registry::resolve_equivalent(
    const std::string& failed_service_id,
    const std::function<bool(const ServiceDescriptor&)>& skip) const {
  std::shared_lock lock(mu_);
  auto failed = slots_.find(failed_service_id);
  if (failed == slots_.end()) not_found("unknown service " + failed_service_id);
  const ServiceDescriptor& original = failed->second.descriptor;
  const TimeMs now = clock_.now();
  std::vector<const ServiceDescriptor*> candidates;
  for (const auto& [id, slot] : slots_) {
    if (id == failed_service_id || !live(slot, now) || slot.suspended) continue;
    const auto& d = slot.descriptor;
    if (d.capability != original.capability) continue;
    if (d.service_class != original.service_class) continue;
    if (!satisfies(d.output_schema, original.output_schema)) continue;
    if (skip && skip(d)) continue;
    candidates.push_back(&d);
  }
  if (candidates.empty()) {
    not_found("no equivalent provider of " + original.capability.str() + " for " +
              failed_service_id);
  }
  return **std::min_element(candidates.begin(), candidates.end(),
                            [](const auto* a, const auto* b) { return cheaper(*a, *b); });
}

void Registry::suspend(const std::string& service_id) {
  std::unique_lock lock(mu_);
  if (auto it = slots_.find(service_id); it != slots_.end() && it->second.registered) {
    it->second.suspended = true;
  }
}

void Registry::resume(const std::string& service_id) {
  std::unique_lock lock(mu_);
  if (auto it = slots_.find(service_id); it != slots_.end()) it->second.suspended = false;
}

bool Registry::is_suspended(const std::string& service_id) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(service_id);
  return it != slots_.end() && it->second.suspended;
}

std::vector<ServiceDescriptor> Registry::suspended_providers(const Capability& capability) const {
  std::shared_lock lock(mu_);
  const TimeMs now = clock_.now();
  std::vector<ServiceDescriptor> out;
  for (const auto& [_, slot] : slots_) {
    if (live(slot, now) && slot.suspended && slot.descriptor.capability == capability &&
        slot.descriptor.service_class == ServiceClass::Functional) {
      out.push_back(slot.descriptor);
    }
  }
  std::sort(out.begin(), out.end(), cheaper);
  return out;
}

std::optional<RegistryEntry> Registry::entry(const std::string& service_id) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(service_id);
  if (it == slots_.end() || !live(it->second, clock_.now())) return std::nullopt;
  return RegistryEntry{it->second.descriptor, it->second.lease, it->second.suspended};
}

std::optional<ServiceDescriptor> Registry::last_known(const std::string& service_id) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(service_id);
  if (it == slots_.end()) return std::nullopt;
  return it->second.descriptor;
}

std::vector<RegistryEntry> Registry::live_entries() const {
  std::shared_lock lock(mu_);
  const TimeMs now = clock_.now();
  std::vector<RegistryEntry> out;
  for (const auto& [_, slot] : slots_) {
    if (live(slot, now)) out.push_back({slot.descriptor, slot.lease, slot.suspended});
  }
  return out;
}

void Registry::register_composite(CompositeSpec spec) {
  check_composite(spec);
  std::unique_lock lock(mu_);
  std::string key = spec.capability.str();
  composites_.insert_or_assign(std::move(key), std::move(spec));
}

std::optional<CompositeSpec> Registry::composite(const Capability& capability) const {
  std::shared_lock lock(mu_);
  auto it = composites_.find(capability.str());
  if (it == composites_.end()) return std::nullopt;
  return it->second;
}

std::vector<CompositeSpec> Registry::composites() const {
  std::shared_lock lock(mu_);
  std::vector<CompositeSpec> out;
  for (const auto& [_, spec] : composites_) out.push_back(spec);
  return out;
}

RegistrySnapshot Registry::snapshot() const {
  RegistrySnapshot snap;
  snap.entries = live_entries();
  snap.composites = composites();
  return snap;
}

void Registry::restore(const RegistrySnapshot& snapshot) {
  std::map<std::string, CompositeSpec> composites;
  for (const auto& spec : snapshot.composites) {
    check_composite(spec);
    if (!composites.emplace(spec.capability.str(), spec).second) {
      violation("snapshot lists composite " + spec.capability.str() + " twice");
    }
  }
  std::map<std::string, Slot> slots;
  for (const auto& e : snapshot.entries) {
    check_descriptor(e.descriptor);
    if (e.lease.service_id != e.descriptor.service_id) {
      violation("snapshot lease does not match service " + e.descriptor.service_id);
    }
    if (e.descriptor.granularity == Granularity::Composite &&
        !composites.contains(e.descriptor.capability.str())) {
      violation("snapshot composite descriptor " + e.descriptor.service_id + " has no spec");
    }
    Slot slot{e.descriptor, e.lease, true, e.suspended};
    if (!slots.emplace(e.descriptor.service_id, std::move(slot)).second) {
      violation("snapshot lists service " + e.descriptor.service_id + " twice");
    }
  }
  std::unique_lock lock(mu_);
  slots_ = std::move(slots);
  composites_ = std::move(composites);
}

Json snapshot_to_json(const RegistrySnapshot& snapshot) {
  std::vector<const RegistryEntry*> entries;
  for (const auto& e : snapshot.entries) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) {
    return a->descriptor.service_id < b->descriptor.service_id;
  });
  Json out_entries = Json::array();
  for (const auto* e : entries) {
    out_entries.push_back({{"descriptor", descriptor_to_json(e->descriptor)},
                           {"lease", {{"expires_at_ms", e->lease.expires_at_ms},
                                      {"epoch", e->lease.epoch}}},
                           {"suspended", e->suspended}});
  }
  Json out_composites = Json::array();
  for (const auto& spec : snapshot.composites) out_composites.push_back(composite_to_json(spec));
  return Json{{"entries", out_entries}, {"composites", out_composites}};
}

RegistrySnapshot snapshot_from_json(const Json& json) {
  json_field::reject_unknown(json, {"entries", "composites"}, "snapshot");
  const Json& entries = json_field::require(json, "entries");
  const Json& composites = json_field::require(json, "composites");
  if (!entries.is_array() || !composites.is_array()) {
    violation("snapshot: entries and composites must be arrays");
  }
  RegistrySnapshot snap;
  for (const auto& item : entries) {
    json_field::reject_unknown(item, {"descriptor", "lease", "suspended"}, "snapshot entry");
    ServiceDescriptor descriptor = descriptor_from_json(json_field::require(item, "descriptor"));
    const Json& lease = json_field::require(item, "lease");
    const TimeMs expires = json_field::integer(lease, "expires_at_ms");
    std::int64_t epoch = json_field::integer(lease, "epoch");
    if (epoch < 1) violation("snapshot: lease epoch must be positive");
    Lease l{descriptor.service_id, expires, static_cast<std::uint64_t>(epoch)};
    const bool suspended = json_field::boolean_or(item, "suspended", false);
    snap.entries.push_back(RegistryEntry{std::move(descriptor), std::move(l), suspended});
  }
  for (const auto& item : composites) snap.composites.push_back(composite_from_json(item));
  return snap;
}

void save_snapshot(const RegistrySnapshot& snapshot, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) violation("cannot write snapshot " + tmp.string());
    out << snapshot_to_json(snapshot).dump(2) << '\n';
    out.flush();
    if (!out) violation("failed writing snapshot " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RegistrySnapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) violation("cannot read snapshot " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(ss.str());
  } catch (const Json::exception& e) {
    violation("corrupt snapshot " + path.string() + ": " + e.what());
  }
  return snapshot_from_json(doc);
}

}  // namespace iotmesh
