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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>
#include <string>

#include "iotmesh/core/message.hpp"
#include "iotmesh/core/value.hpp"

namespace iotmesh::testing {

/// Random generators for property tests. Strings mix ASCII, control
/// characters, XML metacharacters and multi-byte UTF-8.
class TreeGen {
 public:
  explicit TreeGen(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t next() { return rng_(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  std::string text(std::size_t max_len = 12) {
    static const char* const kPieces[] = {"a", "Z", "0", " ", "_", "-", ".", "<", ">", "&",
                                          "\"", "'", "\t", "\n", "\r", "\x01", "\x7f",
                                          "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x8c\xa1",
                                          "_x41", "x", "\\", "/", "]]>"};
    std::string out;
    std::size_t len = below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) out += kPieces[below(std::size(kPieces))];
    return out;
  }

  std::string key() {
    std::string k = text(6);
    return k.empty() ? std::string("k") : k;
  }

  double finite_double() {
    switch (below(5)) {
      case 0: return static_cast<double>(static_cast<std::int64_t>(rng_() % 2001) - 1000);
      case 1: return (static_cast<double>(rng_() >> 11) * 0x1.0p-53 - 0.5) * 1e6;
      case 2: return below(2) ? -0.0 : 0.0;
      case 3: {
        double d;
        do {
          std::uint64_t bits = rng_();
          std::memcpy(&d, &bits, sizeof d);
        } while (!std::isfinite(d));
        return d;
      }
      default: return std::numeric_limits<double>::denorm_min() * static_cast<double>(below(100) + 1);
    }
  }

  Value value(std::size_t depth_budget = 6) {
    std::size_t pick = below(depth_budget > 1 ? 7 : 5);
    switch (pick) {
      case 0: return Value();
      case 1: return Value(below(2) == 1);
      case 2: {
        switch (below(3)) {
          case 0: return Value(static_cast<std::int64_t>(rng_()));
          case 1: return Value(std::numeric_limits<std::int64_t>::min());
          default: return Value(static_cast<std::int64_t>(below(100)) - 50);
        }
      }
      case 3: return Value(finite_double());
      case 4: return Value(text());
      case 5: {
        Value::List list;
        std::size_t n = below(4);
        for (std::size_t i = 0; i < n; ++i) list.push_back(value(depth_budget - 1));
        return Value(std::move(list));
      }
      default: {
        Value::Map map;
        std::size_t n = below(4);
        for (std::size_t i = 0; i < n; ++i) map.emplace(key(), value(depth_budget - 1));
        return Value(std::move(map));
      }
    }
  }

  Message message(std::size_t depth_budget = 6) {
    static const char* const kCaps[] = {"weather.temperature.read", "a", "x1.y_2.z",
                                        "grid.power.meter.read"};
    Message m{.message_id = "m-" + std::to_string(rng_() % 100000) + text(3),
              .capability = Capability::parse(kCaps[below(std::size(kCaps))]),
              .timestamp_ms = static_cast<TimeMs>(rng_() >> 1) * (below(2) ? 1 : -1),
              .body = value(depth_budget)};
    if (below(2)) m.correlation_id = text(8);
    std::size_t headers = below(3);
    for (std::size_t i = 0; i < headers; ++i) m.headers.emplace(text(5), text(5));
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace iotmesh::testing
