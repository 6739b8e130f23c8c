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

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iotmesh {

enum class ValueKind { Null, Bool, Int, Float, Str, List, Map };

/// Schema spelling: null, bool, int, float, string, list, map.
std::string_view to_string(ValueKind kind) noexcept;
/// Accepts the schema spelling; "str" is accepted as an alias of "string".
bool parse_value_kind(std::string_view text, ValueKind& out) noexcept;

/// Format-neutral value tree carried in every message body.
///
/// Floats are always finite: constructing a Value from NaN or an infinity
/// throws ContractViolation. Equality is structural, with floats compared
/// bit for bit (so 0.0 and -0.0 differ).
class Value {
 public:
  using List = std::vector<Value>;
  using Map = std::map<std::string, Value>;

  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : data_(b) {}
  Value(int i) : data_(static_cast<std::int64_t>(i)) {}
  Value(std::int64_t i) : data_(i) {}
  Value(double d);
  Value(std::string s) : data_(std::move(s)) {}
  Value(std::string_view s) : data_(std::string(s)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(List list) : data_(std::move(list)) {}
  Value(Map map) : data_(std::move(map)) {}

  ValueKind kind() const noexcept { return static_cast<ValueKind>(data_.index()); }
  bool is_null() const noexcept { return kind() == ValueKind::Null; }
  bool is_map() const noexcept { return kind() == ValueKind::Map; }

  // Accessors throw ContractViolation on a kind mismatch.
  bool as_bool() const;
  std::int64_t as_int() const;
  double as_float() const;
  const std::string& as_str() const;
  const List& as_list() const;
  const Map& as_map() const;
  List& as_list();
  Map& as_map();

  /// Map lookup; nullptr when this is not a map or the key is absent.
  const Value* find(std::string_view key) const;

  /// A scalar has depth 1; a container adds one level over its deepest child.
  std::size_t depth() const;

  friend bool operator==(const Value& a, const Value& b);

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, List, Map> data_;
};

}  // namespace iotmesh
