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

#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "iotmesh/codec/codec.hpp"
#include "iotmesh/core/error.hpp"

namespace iotmesh::codec::detail {

namespace {

[[noreturn]] void bad(std::string detail) {
  throw FrameworkError(ErrorKind::ContractViolation, "JsonForm: " + std::move(detail));
}

void write_string(std::string& out, std::string_view s) {
  out += '"';
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20 || c == 0x7F) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

void write_value(std::string& out, const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: out += "null"; break;
    case ValueKind::Bool: out += v.as_bool() ? "true" : "false"; break;
    case ValueKind::Int: out += std::to_string(v.as_int()); break;
    case ValueKind::Float: {
      std::string text = format_float(v.as_float());
      // Keep the float tag visible to JSON readers: 21 -> 21.0.
      if (text.find_first_of(".e") == std::string::npos) text += ".0";
      out += text;
      break;
    }
    case ValueKind::Str: write_string(out, v.as_str()); break;
    case ValueKind::List: {
      out += '[';
      bool first = true;
      for (const auto& item : v.as_list()) {
        if (!first) out += ',';
        first = false;
        write_value(out, item);
      }
      out += ']';
      break;
    }
    case ValueKind::Map: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.as_map()) {
        if (!first) out += ',';
        first = false;
        write_string(out, key);
        out += ':';
        write_value(out, item);
      }
      out += '}';
      break;
    }
  }
}

using Json = nlohmann::json;

Value to_value(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null: return Value();
    case Json::value_t::boolean: return Value(j.get<bool>());
    case Json::value_t::number_integer: return Value(j.get<std::int64_t>());
    case Json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        bad("integer exceeds 64-bit signed range");
      }
      return Value(static_cast<std::int64_t>(u));
    }
    case Json::value_t::number_float: {
      double d = j.get<double>();
      if (!std::isfinite(d)) bad("non-finite float");
      return Value(d);
    }
    case Json::value_t::string: return Value(j.get<std::string>());
    case Json::value_t::array: {
      Value::List list;
      list.reserve(j.size());
      for (const auto& item : j) list.push_back(to_value(item));
      return Value(std::move(list));
    }
    case Json::value_t::object: {
      Value::Map map;
      for (const auto& [k, item] : j.items()) {
        if (k.empty()) bad("empty map key");
        map.emplace(k, to_value(item));
      }
      return Value(std::move(map));
    }
    default: bad("unsupported value");
  }
}

struct TooDeep {};

}  // namespace

std::string write_json(const Message& m) {
  std::string out;
  out += "{\"id\":";
  write_string(out, m.message_id);
  out += ",\"corr\":";
  if (m.correlation_id) {
    write_string(out, *m.correlation_id);
  } else {
    out += "null";
  }
  out += ",\"cap\":";
  write_string(out, m.capability.str());
  out += ",\"ts\":";
  out += std::to_string(m.timestamp_ms);
  out += ",\"headers\":{";
  bool first = true;
  for (const auto& [k, v] : m.headers) {
    if (!first) out += ',';
    first = false;
    write_string(out, k);
    out += ':';
    write_string(out, v);
  }
  out += "},\"body\":";
  write_value(out, m.body);
  out += '}';
  return out;
}

Message read_json(std::string_view bytes, std::size_t max_depth) {
  Json doc;
  const int depth_cap = static_cast<int>(max_depth) + 2;
  try {
    doc = Json::parse(bytes.begin(), bytes.end(),
                      [depth_cap](int depth, Json::parse_event_t, Json&) {
                        if (depth > depth_cap) throw TooDeep{};
                        return true;
                      });
  } catch (const TooDeep&) {
    bad("body nested deeper than " + std::to_string(max_depth));
  } catch (const Json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("top level must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "id" && key != "corr" && key != "cap" && key != "ts" && key != "headers" &&
        key != "body") {
      bad("unknown envelope key '" + key + "'");
    }
  }
  auto field = [&](const char* key) -> const Json& {
    auto it = doc.find(key);
    if (it == doc.end()) bad(std::string("missing envelope key '") + key + "'");
    return *it;
  };
  const Json& id = field("id");
  const Json& cap = field("cap");
  const Json& ts = field("ts");
  const Json& body = field("body");
  if (!id.is_string()) bad("id must be a string");
  if (!cap.is_string()) bad("cap must be a string");
  if (!ts.is_number_integer()) bad("ts must be an integer");
  if (ts.is_number_unsigned() &&
      ts.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    bad("ts out of range");
  }

  Message m{.message_id = id.get<std::string>(),
            .capability = Capability::parse(cap.get<std::string>()),
            .timestamp_ms = ts.get<std::int64_t>(),
            .body = to_value(body)};
  if (auto it = doc.find("corr"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) bad("corr must be a string or null");
    m.correlation_id = it->get<std::string>();
  }
  if (auto it = doc.find("headers"); it != doc.end()) {
    if (!it->is_object()) bad("headers must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) bad("header values must be strings");
      m.headers.emplace(k, v.get<std::string>());
    }
  }
  return m;
}

}  // namespace iotmesh::codec::detail
