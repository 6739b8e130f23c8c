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

#include "iotmesh/core/json_io.hpp"

#include <cmath>
#include <limits>

#include "iotmesh/core/error.hpp"

namespace iotmesh {

namespace {
[[noreturn]] void bad(std::string detail) {
  throw FrameworkError(ErrorKind::ContractViolation, std::move(detail));
}
}  // namespace

namespace json_field {

const Json& require(const Json& object, std::string_view key) {
  if (!object.is_object()) bad("expected a JSON object");
  auto it = object.find(std::string(key));
  if (it == object.end()) bad("missing key '" + std::string(key) + "'");
  return *it;
}

std::string string(const Json& object, std::string_view key) {
  const Json& v = require(object, key);
  if (!v.is_string()) bad("key '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

std::int64_t integer(const Json& object, std::string_view key) {
  const Json& v = require(object, key);
  if (v.is_number_unsigned()) {
    if (v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      bad("key '" + std::string(key) + "' out of range");
    }
    return static_cast<std::int64_t>(v.get<std::uint64_t>());
  }
  if (!v.is_number_integer()) bad("key '" + std::string(key) + "' must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t integer_or(const Json& object, std::string_view key, std::int64_t fallback) {
  if (!object.is_object() || !object.contains(std::string(key))) return fallback;
  return integer(object, key);
}

std::string string_or(const Json& object, std::string_view key, std::string fallback) {
  if (!object.is_object() || !object.contains(std::string(key))) return fallback;
  return string(object, key);
}

bool boolean_or(const Json& object, std::string_view key, bool fallback) {
  if (!object.is_object() || !object.contains(std::string(key))) return fallback;
  const Json& v = object.at(std::string(key));
  if (!v.is_boolean()) bad("key '" + std::string(key) + "' must be a boolean");
  return v.get<bool>();
}

void reject_unknown(const Json& object, std::initializer_list<std::string_view> known,
                    std::string_view context) {
  if (!object.is_object()) bad(std::string(context) + ": expected a JSON object");
  for (const auto& [key, _] : object.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || k == key;
    if (!ok) bad(std::string(context) + ": unknown key '" + key + "'");
  }
}

}  // namespace json_field

Json value_to_json(const Value& value) {
  switch (value.kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Bool: return value.as_bool();
    case ValueKind::Int: return value.as_int();
    case ValueKind::Float: return value.as_float();
    case ValueKind::Str: return value.as_str();
    case ValueKind::List: {
      Json out = Json::array();
      for (const auto& item : value.as_list()) out.push_back(value_to_json(item));
      return out;
    }
    case ValueKind::Map: {
      Json out = Json::object();
      for (const auto& [k, v] : value.as_map()) out[k] = value_to_json(v);
      return out;
    }
  }
  return nullptr;
}

Value value_from_json(const Json& json) {
  switch (json.type()) {
    case Json::value_t::null: return Value();
    case Json::value_t::boolean: return Value(json.get<bool>());
    case Json::value_t::number_integer: return Value(json.get<std::int64_t>());
    case Json::value_t::number_unsigned: {
      auto u = json.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        bad("integer exceeds 64-bit signed range");
      }
      return Value(static_cast<std::int64_t>(u));
    }
    case Json::value_t::number_float: {
      double d = json.get<double>();
      if (!std::isfinite(d)) bad("non-finite float");
      return Value(d);
    }
    case Json::value_t::string: return Value(json.get<std::string>());
    case Json::value_t::array: {
      Value::List list;
      list.reserve(json.size());
      for (const auto& item : json) list.push_back(value_from_json(item));
      return Value(std::move(list));
    }
    case Json::value_t::object: {
      Value::Map map;
      for (const auto& [k, v] : json.items()) {
        if (k.empty()) bad("empty map key");
        map.emplace(k, value_from_json(v));
      }
      return Value(std::move(map));
    }
    default: bad("unsupported JSON value");
  }
}

Json schema_to_json(const Schema& schema) {
  Json out = Json::array();
  for (const auto& f : schema.fields()) {
    out.push_back({{"name", f.name}, {"kind", std::string(to_string(f.kind))}, {"required", f.required}});
  }
  return out;
}

Schema schema_from_json(const Json& json) {
  if (json.is_null()) return Schema();
  if (!json.is_array()) bad("schema must be an array of fields");
  std::vector<FieldSpec> fields;
  for (const auto& item : json) {
    json_field::reject_unknown(item, {"name", "kind", "required"}, "schema field");
    FieldSpec f;
    f.name = json_field::string(item, "name");
    if (!parse_value_kind(json_field::string(item, "kind"), f.kind)) {
      bad("unknown value kind for field '" + f.name + "'");
    }
    f.required = json_field::boolean_or(item, "required", true);
    fields.push_back(std::move(f));
  }
  return Schema(std::move(fields));
}

Json descriptor_to_json(const ServiceDescriptor& d) {
  return Json{
      {"service_id", d.service_id},
      {"capability", d.capability.str()},
      {"class", std::string(to_string(d.service_class))},
      {"device_id", d.device_id},
      {"domain", d.domain},
      {"input_schema", schema_to_json(d.input_schema)},
      {"output_schema", schema_to_json(d.output_schema)},
      {"format", std::string(to_string(d.preferred_format))},
      {"granularity", std::string(to_string(d.granularity))},
      {"cost_hint_ms", d.cost_hint_ms},
      {"lease_ttl_ms", d.lease_ttl_ms},
  };
}

ServiceDescriptor descriptor_from_json(const Json& json) {
  json_field::reject_unknown(json,
                             {"service_id", "capability", "class", "device_id", "domain",
                              "input_schema", "output_schema", "format", "granularity",
                              "cost_hint_ms", "lease_ttl_ms"},
                             "descriptor");
  auto cls = parse_service_class(json_field::string_or(json, "class", "functional"));
  auto fmt = parse_wire_format(json_field::string_or(json, "format", "json"));
  auto gran = parse_granularity(json_field::string_or(json, "granularity", "atomic"));
  if (!cls) bad("descriptor: unknown class");
  if (!fmt) bad("descriptor: unknown format");
  if (!gran) bad("descriptor: unknown granularity");
  ServiceDescriptor d{
      .service_id = json_field::string(json, "service_id"),
      .capability = Capability::parse(json_field::string(json, "capability")),
      .service_class = *cls,
      .device_id = json_field::string_or(json, "device_id", ""),
      .domain = json_field::string_or(json, "domain", ""),
      .input_schema = schema_from_json(json.value("input_schema", Json())),
      .output_schema = schema_from_json(json.value("output_schema", Json())),
      .preferred_format = *fmt,
      .granularity = *gran,
      .cost_hint_ms = json_field::integer_or(json, "cost_hint_ms", 0),
      .lease_ttl_ms = json_field::integer_or(json, "lease_ttl_ms", kDefaultLeaseTtlMs),
  };
  check_descriptor(d);
  return d;
}

Json merge_rules_to_json(const std::vector<MergeRule>& rules) {
  Json out = Json::array();
  for (const auto& r : rules) {
    out.push_back({{"member", r.member}, {"from", r.from}, {"to", r.to}});
  }
  return out;
}

std::vector<MergeRule> merge_rules_from_json(const Json& json) {
  if (!json.is_array()) bad("merge must be an array");
  std::vector<MergeRule> out;
  for (const auto& item : json) {
    json_field::reject_unknown(item, {"member", "from", "to"}, "merge rule");
    std::int64_t member = json_field::integer(item, "member");
    if (member < 0) bad("merge rule member index is negative");
    out.push_back({static_cast<std::size_t>(member), json_field::string(item, "from"),
                   json_field::string(item, "to")});
  }
  return out;
}

Json composite_to_json(const CompositeSpec& spec) {
  Json members = Json::array();
  for (const auto& m : spec.members) members.push_back(m.str());
  return Json{
      {"capability", spec.capability.str()},
      {"members", members},
      {"merge", merge_rules_to_json(spec.merge)},
      {"mode", std::string(to_string(spec.mode))},
      {"schema", schema_to_json(spec.output_schema)},
  };
}

CompositeSpec composite_from_json(const Json& json) {
  json_field::reject_unknown(json, {"capability", "members", "merge", "mode", "schema"},
                             "composite spec");
  const Json& members = json_field::require(json, "members");
  if (!members.is_array()) bad("composite spec: members must be an array");
  std::vector<Capability> caps;
  for (const auto& m : members) {
    if (!m.is_string()) bad("composite spec: member must be a string");
    caps.push_back(Capability::parse(m.get<std::string>()));
  }
  auto mode = parse_execution_mode(json_field::string_or(json, "mode", "parallel"));
  if (!mode) bad("composite spec: mode must be 'parallel' or 'chained'");
  CompositeSpec spec{
      .capability = Capability::parse(json_field::string(json, "capability")),
      .members = std::move(caps),
      .merge = merge_rules_from_json(json.value("merge", Json::array())),
      .mode = *mode,
      .output_schema = schema_from_json(json.value("schema", Json())),
  };
  check_composite(spec);
  return spec;
}

}  // namespace iotmesh
