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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "iotmesh/core/composite.hpp"
#include "iotmesh/core/descriptor.hpp"
#include "iotmesh/core/json_io.hpp"
#include "iotmesh/core/scheduler.hpp"

namespace iotmesh {

struct Lease {
  std::string service_id;
  TimeMs expires_at_ms = 0;
  /// Bumped each time the service registers again after its previous
  /// registration expired or was withdrawn. Renewal leaves it unchanged.
  std::uint64_t epoch = 0;

  friend bool operator==(const Lease&, const Lease&) = default;
};

struct RegistryEntry {
  ServiceDescriptor descriptor;
  Lease lease;
  /// Taken out of discovery by the monitor while its breaker is open.
  bool suspended = false;

  friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

struct RegistrySnapshot {
  std::vector<RegistryEntry> entries;  // sorted by service_id
  std::vector<CompositeSpec> composites;  // sorted by capability

  friend bool operator==(const RegistrySnapshot&, const RegistrySnapshot&) = default;
};

/// Capability-indexed service registry with leases.
///
/// All operations are linearizable: readers share a lock, writers take it
/// exclusively. Lease liveness is evaluated against the injected clock at
/// call time, so an expired service drops out of discovery without a sweep.
class Registry {
 public:
  explicit Registry(const Clock& clock) : clock_(clock) {}

  /// Makes `descriptor` discoverable immediately. Throws ContractViolation
  /// on an invalid descriptor, a duplicate live service_id, or a Composite
  /// descriptor without a registered CompositeSpec for its capability.
  Lease register_service(ServiceDescriptor descriptor);

  /// Extends the lease by its ttl from now. NotFound if the lease expired,
  /// the service is unknown, or `lease` belongs to an older epoch.
  Lease renew(const Lease& lease);

  /// Idempotent.
  void deregister(const std::string& service_id);

  /// Live, non-suspended providers of exactly `capability`, cheapest first
  /// (ties by service_id). NonFunctional services only when
  /// `expose_nonfunctional`.
  std::vector<ServiceDescriptor> discover(const Capability& capability,
                                          const std::optional<std::string>& domain = std::nullopt,
                                          bool expose_nonfunctional = false) const;

  /// A live provider with the same capability, a different service_id and an
  /// output schema that carries every required field of the failed
  /// service's output. `skip` lets callers rule out candidates they know to
  /// be unhealthy. Throws NotFound when nothing qualifies or
  /// `failed_service_id` was never registered.
  ServiceDescriptor resolve_equivalent(
      const std::string& failed_service_id,
      const std::function<bool(const ServiceDescriptor&)>& skip = {}) const;

  void suspend(const std::string& service_id);
  void resume(const std::string& service_id);
  bool is_suspended(const std::string& service_id) const;
  /// Live but suspended providers of `capability` (functional only).
  std::vector<ServiceDescriptor> suspended_providers(const Capability& capability) const;

  /// Live entry, suspended or not.
  std::optional<RegistryEntry> entry(const std::string& service_id) const;
  /// Last known descriptor, including expired or withdrawn services.
  std::optional<ServiceDescriptor> last_known(const std::string& service_id) const;
  /// Every live entry, sorted by service_id.
  std::vector<RegistryEntry> live_entries() const;

  void register_composite(CompositeSpec spec);
  std::optional<CompositeSpec> composite(const Capability& capability) const;
  std::vector<CompositeSpec> composites() const;

  RegistrySnapshot snapshot() const;
  /// Replaces the registry contents. Throws ContractViolation and leaves the
  /// registry untouched when the snapshot is inconsistent.
  void restore(const RegistrySnapshot& snapshot);

 private:
  struct Slot {
    ServiceDescriptor descriptor;
    Lease lease;
    bool registered = false;  // false once deregistered
    bool suspended = false;
  };

  bool live(const Slot& slot, TimeMs now) const {
    return slot.registered && slot.lease.expires_at_ms > now;
  }

  const Clock& clock_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Slot> slots_;
  std::map<std::string, CompositeSpec> composites_;
};

/// Snapshot document: {"entries": [...], "composites": [...]}, entries
/// sorted by service_id.
Json snapshot_to_json(const RegistrySnapshot& snapshot);
RegistrySnapshot snapshot_from_json(const Json& json);

/// Writes to a temporary file in the same directory, then renames.
void save_snapshot(const RegistrySnapshot& snapshot, const std::filesystem::path& path);
/// ContractViolation on unreadable, truncated, or inconsistent files.
RegistrySnapshot load_snapshot(const std::filesystem::path& path);

}  // namespace iotmesh
