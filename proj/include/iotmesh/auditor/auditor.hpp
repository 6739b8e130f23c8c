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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iotmesh/core/error.hpp"
#include "iotmesh/core/message.hpp"

namespace iotmesh {

struct Hop {
  std::string service_id;
  Capability capability;
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  std::optional<ErrorKind> outcome;  // nullopt = ok

  friend bool operator==(const Hop&, const Hop&) = default;
};

/// One gateway transaction. `seq` is assigned by the auditor on append.
struct AuditRecord {
  std::uint64_t seq = 0;
  std::string transaction_id;
  std::optional<std::string> correlation_id;
  Capability capability;
  std::string consumer_id;
  /// How the request was served: "atomic", "split", "composite", or "none"
  /// when it failed before routing.
  std::string route = "none";
  TimeMs started_ms = 0;
  TimeMs total_ms = 0;
  std::vector<Hop> hops;
  std::optional<ErrorKind> final_outcome;  // nullopt = ok

  bool ok() const noexcept { return !final_outcome.has_value(); }
  friend bool operator==(const AuditRecord&, const AuditRecord&) = default;
};

/// Throws ContractViolation when a record is inconsistent: empty
/// transaction id, a successful record without hops, a hop ending before it
/// starts, or a total shorter than the longest hop.
void check_record(const AuditRecord& record);

/// Records travel as canonical messages: message_id is the transaction id,
/// the envelope carries correlation, capability and start time, and the
/// body holds the rest.
Message record_to_message(const AuditRecord& record);
AuditRecord record_from_message(const Message& message);

std::string_view outcome_name(const std::optional<ErrorKind>& outcome) noexcept;

struct AuditQuery {
  std::optional<std::string> transaction_id;
  std::optional<Capability> capability;
  std::optional<TimeMs> from_ms;  // inclusive, on started_ms
  std::optional<TimeMs> to_ms;    // inclusive
  std::optional<std::uint64_t> after_seq;
  std::optional<std::size_t> limit;
};

struct AuditStats {
  std::size_t count = 0;
  std::optional<TimeMs> p50_ms;
  std::optional<TimeMs> p95_ms;
  std::optional<TimeMs> max_ms;
  std::map<ErrorKind, std::size_t> fault_counts;
};

/// Nearest-rank percentile of an ascending sequence: the value at rank
/// ceil(p/100 * n). Empty input yields nullopt.
std::optional<TimeMs> nearest_rank(const std::vector<TimeMs>& sorted, int percentile);

/// Append-only transaction log. Appends are serialized under one lock and,
/// when a directory is configured, written as one JsonForm line each into
/// segment files that rotate every `segment_records` records. Opening an
/// existing directory replays its segments.
class Auditor {
 public:
  struct Options {
    std::optional<std::filesystem::path> directory;
    std::size_t segment_records = 10000;
  };

  Auditor();
  explicit Auditor(Options options);
  Auditor(const Auditor&) = delete;
  Auditor& operator=(const Auditor&) = delete;

  /// Returns the assigned sequence number (1, 2, ...).
  std::uint64_t append(AuditRecord record);

  std::vector<AuditRecord> query(const AuditQuery& filter) const;
  AuditStats stats(const std::optional<Capability>& capability = std::nullopt,
                   std::optional<TimeMs> from_ms = std::nullopt,
                   std::optional<TimeMs> to_ms = std::nullopt) const;
  /// Blocks until a record with seq > `after_seq` exists or the timeout
  /// passes, then returns every such record.
  std::vector<AuditRecord> wait_after(std::uint64_t after_seq,
                                      std::chrono::milliseconds timeout) const;

  std::uint64_t last_seq() const;
  std::size_t size() const;
  std::vector<std::filesystem::path> segment_files() const;

  static std::string segment_name(std::size_t index);

 private:
  void replay();
  void write_line(const AuditRecord& record);

  Options options_;
  mutable std::mutex mu_;
  mutable std::condition_variable appended_;
  std::vector<AuditRecord> records_;
  std::ofstream active_;
  std::size_t active_index_ = 0;
  std::size_t active_count_ = 0;
};

}  // namespace iotmesh
