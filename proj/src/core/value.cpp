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

#include "iotmesh/core/value.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "iotmesh/core/error.hpp"

namespace iotmesh {

std::string_view to_string(ValueKind kind) noexcept {
  switch (kind) {
    case ValueKind::Null: return "null";
    case ValueKind::Bool: return "bool";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Str: return "string";
    case ValueKind::List: return "list";
    case ValueKind::Map: return "map";
  }
  return "null";
}

bool parse_value_kind(std::string_view text, ValueKind& out) noexcept {
  static constexpr std::pair<std::string_view, ValueKind> kNames[] = {
      {"null", ValueKind::Null}, {"bool", ValueKind::Bool},  {"int", ValueKind::Int},
      {"float", ValueKind::Float}, {"string", ValueKind::Str}, {"str", ValueKind::Str},
      {"list", ValueKind::List}, {"map", ValueKind::Map},
  };
  for (const auto& [name, kind] : kNames) {
    if (name == text) {
      out = kind;
      return true;
    }
  }
  return false;
}

Value::Value(double d) : data_(d) {
  if (!std::isfinite(d)) {
    throw FrameworkError(ErrorKind::ContractViolation, "non-finite float");
  }
}

namespace {
[[noreturn]] void mismatch(ValueKind want, ValueKind got) {
  throw FrameworkError(ErrorKind::ContractViolation,
                       "expected " + std::string(to_string(want)) + ", got " +
                           std::string(to_string(got)));
}
}  // namespace

bool Value::as_bool() const {
  if (kind() != ValueKind::Bool) mismatch(ValueKind::Bool, kind());
  return std::get<bool>(data_);
}
std::int64_t Value::as_int() const {
  if (kind() != ValueKind::Int) mismatch(ValueKind::Int, kind());
  return std::get<std::int64_t>(data_);
}
double Value::as_float() const {
  if (kind() != ValueKind::Float) mismatch(ValueKind::Float, kind());
  return std::get<double>(data_);
}
const std::string& Value::as_str() const {
  if (kind() != ValueKind::Str) mismatch(ValueKind::Str, kind());
  return std::get<std::string>(data_);
}
const Value::List& Value::as_list() const {
  if (kind() != ValueKind::List) mismatch(ValueKind::List, kind());
  return std::get<List>(data_);
}
const Value::Map& Value::as_map() const {
  if (kind() != ValueKind::Map) mismatch(ValueKind::Map, kind());
  return std::get<Map>(data_);
}
Value::List& Value::as_list() {
  if (kind() != ValueKind::List) mismatch(ValueKind::List, kind());
  return std::get<List>(data_);
}
Value::Map& Value::as_map() {
  if (kind() != ValueKind::Map) mismatch(ValueKind::Map, kind());
  return std::get<Map>(data_);
}

const Value* Value::find(std::string_view key) const {
  if (kind() != ValueKind::Map) return nullptr;
  const auto& map = std::get<Map>(data_);
  auto it = map.find(std::string(key));
  return it == map.end() ? nullptr : &it->second;
}

std::size_t Value::depth() const {
  std::size_t deepest = 0;
  if (kind() == ValueKind::List) {
    for (const auto& item : std::get<List>(data_)) deepest = std::max(deepest, item.depth());
  } else if (kind() == ValueKind::Map) {
    for (const auto& [_, item] : std::get<Map>(data_)) deepest = std::max(deepest, item.depth());
  }
  return deepest + 1;
}

bool operator==(const Value& a, const Value& b) {
  if (a.data_.index() != b.data_.index()) return false;
  switch (a.kind()) {
    case ValueKind::Null: return true;
    case ValueKind::Bool: return std::get<bool>(a.data_) == std::get<bool>(b.data_);
    case ValueKind::Int:
      return std::get<std::int64_t>(a.data_) == std::get<std::int64_t>(b.data_);
    case ValueKind::Float:
      return std::bit_cast<std::uint64_t>(std::get<double>(a.data_)) ==
             std::bit_cast<std::uint64_t>(std::get<double>(b.data_));
    case ValueKind::Str: return std::get<std::string>(a.data_) == std::get<std::string>(b.data_);
    case ValueKind::List: return std::get<Value::List>(a.data_) == std::get<Value::List>(b.data_);
    case ValueKind::Map: return std::get<Value::Map>(a.data_) == std::get<Value::Map>(b.data_);
  }
  return false;
}

}  // namespace iotmesh
