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

#include "iotmesh/auditor/auditor.hpp"

#include <algorithm>
#include <cstdio>

#include "iotmesh/codec/codec.hpp"

namespace iotmesh {

namespace {

[[noreturn]] void violation(std::string detail) {
  throw_error(ErrorKind::ContractViolation, std::move(detail));
}

Value outcome_value(const std::optional<ErrorKind>& outcome) {
  return Value(std::string(outcome_name(outcome)));
}

std::optional<ErrorKind> outcome_from(const Value& v) {
  const std::string& text = v.as_str();
  if (text == "ok") return std::nullopt;
  auto kind = parse_error_kind(text);
  if (!kind) violation("unknown audit outcome '" + text + "'");
  return kind;
}

const Value& field(const Value& map, std::string_view key) {
  const Value* v = map.find(key);
  if (v == nullptr) violation("audit record lacks '" + std::string(key) + "'");
  return *v;
}

bool matches(const AuditRecord& r, const AuditQuery& q) {
  if (q.transaction_id && r.transaction_id != *q.transaction_id) return false;
  if (q.capability && r.capability != *q.capability) return false;
  if (q.from_ms && r.started_ms < *q.from_ms) return false;
  if (q.to_ms && r.started_ms > *q.to_ms) return false;
  if (q.after_seq && r.seq <= *q.after_seq) return false;
  return true;
}

}  // namespace

std::string_view outcome_name(const std::optional<ErrorKind>& outcome) noexcept {
  return outcome ? to_string(*outcome) : std::string_view("ok");
}

void check_record(const AuditRecord& r) {
  if (r.transaction_id.empty()) violation("audit record needs a transaction_id");
  if (r.ok() && r.hops.empty()) {
    violation("completed transaction " + r.transaction_id + " has no hops");
  }
  if (r.total_ms < 0) violation("negative total_ms in " + r.transaction_id);
  for (const Hop& h : r.hops) {
    if (h.service_id.empty()) violation("hop without service_id in " + r.transaction_id);
    if (h.end_ms < h.start_ms) {
      violation("hop " + h.service_id + " ends before it starts in " + r.transaction_id);
    }
    if (h.end_ms - h.start_ms > r.total_ms) {
      violation("total_ms shorter than hop " + h.service_id + " in " + r.transaction_id);
    }
  }
}

Message record_to_message(const AuditRecord& r) {
  Value::List hops;
  for (const Hop& h : r.hops) {
    hops.push_back(Value(Value::Map{{"service_id", Value(h.service_id)},
                                    {"capability", Value(h.capability.str())},
                                    {"start_ms", Value(h.start_ms)},
                                    {"end_ms", Value(h.end_ms)},
                                    {"outcome", outcome_value(h.outcome)}}));
  }
  Value::Map body{{"seq", Value(static_cast<std::int64_t>(r.seq))},
                  {"consumer_id", Value(r.consumer_id)},
                  {"route", Value(r.route)},
                  {"total_ms", Value(r.total_ms)},
                  {"outcome", outcome_value(r.final_outcome)},
                  {"hops", Value(std::move(hops))}};
  return Message{.message_id = r.transaction_id,
                 .correlation_id = r.correlation_id,
                 .capability = r.capability,
                 .timestamp_ms = r.started_ms,
                 .body = Value(std::move(body))};
}

AuditRecord record_from_message(const Message& m) {
  const Value& body = m.body;
  if (!body.is_map()) violation("audit record body must be a map");
  std::int64_t seq = field(body, "seq").as_int();
  if (seq < 0) violation("negative audit seq");
  AuditRecord r{.seq = static_cast<std::uint64_t>(seq),
                .transaction_id = m.message_id,
                .correlation_id = m.correlation_id,
                .capability = m.capability,
                .consumer_id = field(body, "consumer_id").as_str(),
                .route = field(body, "route").as_str(),
                .started_ms = m.timestamp_ms,
                .total_ms = field(body, "total_ms").as_int(),
                .final_outcome = outcome_from(field(body, "outcome"))};
  for (const Value& h : field(body, "hops").as_list()) {
    r.hops.push_back(Hop{.service_id = field(h, "service_id").as_str(),
                         .capability = Capability::parse(field(h, "capability").as_str()),
                         .start_ms = field(h, "start_ms").as_int(),
                         .end_ms = field(h, "end_ms").as_int(),
                         .outcome = outcome_from(field(h, "outcome"))});
  }
  return r;
}

std::optional<TimeMs> nearest_rank(const std::vector<TimeMs>& sorted, int percentile) {
  if (sorted.empty()) return std::nullopt;
  const std::size_t n = sorted.size();
  std::size_t rank = (static_cast<std::size_t>(percentile) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

Auditor::Auditor() : Auditor(Options{}) {}

Auditor::Auditor(Options options) : options_(std::move(options)) {
  if (options_.segment_records == 0) violation("segment_records must be positive");
  if (options_.directory) {
    std::error_code ec;
    std::filesystem::create_directories(*options_.directory, ec);
    if (ec) violation("cannot create audit directory " + options_.directory->string());
    replay();
  }
}

std::string Auditor::segment_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "segment-%06zu.ndjson", index);
  return buf;
}

void Auditor::replay() {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*options_.directory)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("segment-", 0) == 0 && entry.path().extension() == ".ndjson") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::size_t count = 0;
    std::uintmax_t good_bytes = 0;
    bool torn = false;
    while (std::getline(in, line)) {
      if (in.eof()) {  // unterminated tail from an interrupted write
        torn = true;
        break;
      }
      good_bytes += line.size() + 1;
      AuditRecord r = record_from_message(codec::detail::read_json(line, Message::kMaxDepth));
      if (r.seq != records_.size() + 1) {
        violation("audit segment " + path.filename().string() + " breaks the sequence at " +
                  std::to_string(r.seq));
      }
      records_.push_back(std::move(r));
      ++count;
    }
    in.close();
    if (torn) std::filesystem::resize_file(path, good_bytes);
    active_index_ = std::stoul(path.filename().string().substr(8, 6));
    active_count_ = count;
  }
}

void Auditor::write_line(const AuditRecord& record) {
  if (!active_.is_open() || active_count_ >= options_.segment_records) {
    if (active_.is_open()) active_.close();
    if (active_index_ == 0 || active_count_ >= options_.segment_records) {
      ++active_index_;
      active_count_ = 0;
    }
    active_.open(*options_.directory / segment_name(active_index_),
                 std::ios::binary | std::ios::app);
    if (!active_) violation("cannot open audit segment " + segment_name(active_index_));
  }
  active_ << codec::detail::write_json(record_to_message(record)) << '\n';
  active_.flush();
  if (!active_) violation("audit segment write failed");
  ++active_count_;
}

std::uint64_t Auditor::append(AuditRecord record) {
  check_record(record);
  std::uint64_t seq;
  {
    std::lock_guard lock(mu_);
    record.seq = records_.size() + 1;
    seq = record.seq;
    if (options_.directory) write_line(record);
    records_.push_back(std::move(record));
  }
  appended_.notify_all();
  return seq;
}

std::vector<AuditRecord> Auditor::query(const AuditQuery& filter) const {
  std::lock_guard lock(mu_);
  std::vector<AuditRecord> out;
  std::size_t start = 0;
  if (filter.after_seq) start = std::min<std::size_t>(*filter.after_seq, records_.size());
  for (std::size_t i = start; i < records_.size(); ++i) {
    if (filter.limit && out.size() >= *filter.limit) break;
    if (matches(records_[i], filter)) out.push_back(records_[i]);
  }
  return out;
}

AuditStats Auditor::stats(const std::optional<Capability>& capability,
                          std::optional<TimeMs> from_ms, std::optional<TimeMs> to_ms) const {
  AuditQuery q{.capability = capability, .from_ms = from_ms, .to_ms = to_ms};
  std::vector<TimeMs> totals;
  AuditStats s;
  for (const AuditRecord& r : query(q)) {
    totals.push_back(r.total_ms);
    if (r.final_outcome) ++s.fault_counts[*r.final_outcome];
  }
  std::sort(totals.begin(), totals.end());
  s.count = totals.size();
  s.p50_ms = nearest_rank(totals, 50);
  s.p95_ms = nearest_rank(totals, 95);
  if (!totals.empty()) s.max_ms = totals.back();
  return s;
}

std::vector<AuditRecord> Auditor::wait_after(std::uint64_t after_seq,
                                             std::chrono::milliseconds timeout) const {
  {
    std::unique_lock lock(mu_);
    appended_.wait_for(lock, timeout, [&] { return records_.size() > after_seq; });
  }
  return query(AuditQuery{.after_seq = after_seq});
}

std::uint64_t Auditor::last_seq() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::size_t Auditor::size() const { return last_seq(); }

std::vector<std::filesystem::path> Auditor::segment_files() const {
  std::lock_guard lock(mu_);
  std::vector<std::filesystem::path> out;
  if (!options_.directory) return out;
  for (std::size_t i = 1; i <= active_index_; ++i) out.push_back(*options_.directory / segment_name(i));
  return out;
}

}  // namespace iotmesh
