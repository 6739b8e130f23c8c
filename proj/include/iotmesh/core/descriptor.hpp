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

#include <optional>
#include <string>
#include <string_view>

#include "iotmesh/core/capability.hpp"
#include "iotmesh/core/message.hpp"
#include "iotmesh/core/schema.hpp"

namespace iotmesh {

/// Functional services carry operational data and are exposed to consumers.
/// NonFunctional ones (audit, monitoring, logging) are internal only.
enum class ServiceClass { Functional, NonFunctional };

enum class Granularity { Atomic, Composite };

std::string_view to_string(ServiceClass c) noexcept;
std::string_view to_string(Granularity g) noexcept;
std::optional<ServiceClass> parse_service_class(std::string_view text) noexcept;
std::optional<Granularity> parse_granularity(std::string_view text) noexcept;

inline constexpr TimeMs kDefaultLeaseTtlMs = 30000;

struct ServiceDescriptor {
  std::string service_id;
  Capability capability;
  ServiceClass service_class = ServiceClass::Functional;
  std::string device_id;
  std::string domain;
  Schema input_schema;
  Schema output_schema;
  WireFormat preferred_format = WireFormat::Json;
  Granularity granularity = Granularity::Atomic;
  /// Estimated processing time of this service.
  TimeMs cost_hint_ms = 0;
  TimeMs lease_ttl_ms = kDefaultLeaseTtlMs;

  friend bool operator==(const ServiceDescriptor&, const ServiceDescriptor&) = default;
};

/// Field-level checks that do not need registry state. Throws
/// ContractViolation.
void check_descriptor(const ServiceDescriptor& descriptor);

}  // namespace iotmesh
