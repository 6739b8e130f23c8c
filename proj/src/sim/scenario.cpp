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

#include "iotmesh/sim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "iotmesh/codec/codec.hpp"
#include "iotmesh/gateway/status.hpp"

namespace iotmesh {

namespace {

[[noreturn]] void bad(std::string detail) {
  throw_error(ErrorKind::ContractViolation, std::move(detail));
}

std::string setting_text(const Json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  bad("config value for " + key + " must be a string, integer or boolean");
}

void flatten_config(const Json& object, const std::string& prefix, FrameworkConfig& config) {
  for (const auto& [k, v] : object.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten_config(v, key, config);
    } else {
      apply_setting(config, key, setting_text(v, key));
    }
  }
}

WireFormat format_field(const Json& j, std::string_view key) {
  const std::string text = json_field::string_or(j, key, "json");
  auto f = parse_wire_format(text);
  if (!f) bad("unknown format '" + text + "' for " + std::string(key));
  return *f;
}

WorkloadItem workload_from_json(const Json& j) {
  json_field::reject_unknown(j,
                             {"at_ms", "label", "capability", "token", "consumer", "format",
                              "accept", "deadline_ms", "body", "repeat", "every_ms"},
                             "workload item");
  WorkloadItem w{.capability = Capability::parse(json_field::string(j, "capability"))};
  w.at_ms = json_field::integer_or(j, "at_ms", 0);
  w.label = json_field::string_or(j, "label", w.capability.str());
  w.token = json_field::string(j, "token");
  w.consumer_id = json_field::string_or(j, "consumer", "");
  w.format = format_field(j, "format");
  w.accept = format_field(j, "accept");
  w.deadline_ms = json_field::integer_or(j, "deadline_ms", kDefaultDeadlineMs);
  if (j.contains("body")) w.body = value_from_json(j["body"]);
  w.repeat = static_cast<int>(json_field::integer_or(j, "repeat", 1));
  w.every_ms = json_field::integer_or(j, "every_ms", 0);
  if (w.at_ms < 0) bad("workload at_ms must not be negative");
  if (w.repeat < 1) bad("workload repeat must be at least 1");
  if (w.every_ms < 0) bad("workload every_ms must not be negative");
  return w;
}

const std::vector<std::string_view> kAssertionKinds = {
    "latency", "outcome", "classification", "breaker", "health",
    "discoverable", "audit_count", "event_count"};

void check_assertion(const Json& a) {
  if (!a.is_object()) bad("assertion must be an object");
  const std::string kind = json_field::string(a, "kind");
  if (std::find(kAssertionKinds.begin(), kAssertionKinds.end(), kind) == kAssertionKinds.end()) {
    bad("unknown assertion kind '" + kind + "'");
  }
  if (kind == "classification" || kind == "breaker" || kind == "health") {
    json_field::string(a, "service");
    json_field::string(a, "expect");
  }
  if (kind == "discoverable") {
    Capability::parse(json_field::string(a, "capability"));
    if (!a.contains("expect") || !a["expect"].is_boolean()) {
      bad("discoverable assertion needs a boolean 'expect'");
    }
  }
  if (kind == "outcome") {
    const std::string expect = json_field::string_or(a, "expect", "");
    if (expect.empty() && !a.contains("status")) bad("outcome assertion needs expect or status");
    if (!expect.empty() && expect != "ok" && !parse_error_kind(expect)) {
      bad("unknown outcome '" + expect + "'");
    }
    const std::string mode = json_field::string_or(a, "mode", "all");
    if (mode != "all" && mode != "any" && mode != "none") bad("unknown mode '" + mode + "'");
  }
  if (kind == "event_count") json_field::string(a, "topic");
}

// Per-request row of the report.
struct RequestRow {
  std::uint64_t seq = 0;
  std::string label;
  std::string capability;
  TimeMs issued_ms = 0;
  bool done = false;
  TimeMs completed_ms = 0;
  std::string transaction_id;
  std::optional<ErrorKind> outcome;
  std::string detail;
  Json body;
};

class Runner {
 public:
  Runner(const Scenario& s, Scheduler& clock)
      : s_(s), clock_(clock), fleet_(clock), fw_(clock, fleet_, s.config) {
    fleet_.attach(fw_.registry(), &fw_.bus(), &fw_.device_keys());
  }

  // Everything that must be set up before the clock starts moving.
  void setup() {
    events_sub_.emplace(fw_.bus().subscribe(
        "#",
        [this](const BusEvent& e) {
          std::lock_guard lock(mu_);
          events_.push_back(Json{
              {"at_ms", clock_.now()},
              {"topic", e.topic},
              {"delivery_id", e.delivery_id},
              {"attempt", e.attempt},
              {"message",
               Json{{"id", e.payload.message_id},
                    {"capability", e.payload.capability.str()},
                    {"headers", e.payload.headers},
                    {"body", value_to_json(e.payload.body)}}},
          });
        },
        AckMode::Auto));
    for (const auto& c : s_.composites) fw_.registry().register_composite(c);
    for (const auto& d : s_.devices) fleet_.spawn_device(d);
    for (const auto& f : s_.faults) fleet_.inject_fault(f);
    for (const auto& split : s_.splits) {
      if (split.at_ms <= 0) {
        fw_.gateway().register_split(split.mapping);
      } else {
        clock_.schedule_at(split.at_ms,
                           [this, m = split.mapping] { fw_.gateway().register_split(m); });
      }
    }
    for (const auto& w : s_.workload) {
      for (int i = 0; i < w.repeat; ++i) {
        const TimeMs at = w.at_ms + static_cast<TimeMs>(i) * w.every_ms;
        const std::size_t row = rows_.size();
        rows_.push_back(RequestRow{.seq = row + 1, .label = w.label,
                                   .capability = w.capability.str(), .issued_ms = at});
        clock_.schedule_at(at, [this, &w, row] { issue(w, row); });
      }
    }
    results_.resize(s_.assertions.size());
    for (std::size_t i = 0; i < s_.assertions.size(); ++i) {
      const Json& a = s_.assertions[i];
      if (a.contains("at_ms")) {
        clock_.schedule_at(json_field::integer(a, "at_ms"), [this, i] {
          auto r = evaluate(s_.assertions[i]);
          std::lock_guard lock(mu_);
          results_[i] = std::move(r);
        });
      }
    }
    fw_.start();
  }

  TimeMs end_time() const {
    if (s_.run_until_ms) return *s_.run_until_ms;
    TimeMs end = 0;
    TimeMs longest = 0;
    for (const auto& w : s_.workload) {
      end = std::max(end, w.at_ms + static_cast<TimeMs>(w.repeat - 1) * w.every_ms);
      longest = std::max(longest, w.deadline_ms);
    }
    for (const auto& f : s_.faults) end = std::max(end, f.start_ms + f.duration_ms);
    for (const auto& sp : s_.splits) end = std::max(end, sp.at_ms);
    for (const auto& a : s_.assertions) end = std::max(end, a.value("at_ms", TimeMs{0}));
    if (s_.workload.empty() && s_.faults.empty() && s_.assertions.empty()) return 0;
    return end + longest + s_.config.invoker.late_grace_ms + 1;
  }

  ScenarioReport finish() {
    fw_.stop();
    ScenarioReport report;
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < s_.assertions.size(); ++i) {
      if (!s_.assertions[i].contains("at_ms")) results_[i] = evaluate_locked(s_.assertions[i]);
    }
    Json requests = Json::array();
    std::map<std::string, int> fault_counts;
    std::size_t ok = 0;
    for (const auto& r : rows_) {
      Json row{{"seq", r.seq}, {"label", r.label}, {"capability", r.capability},
               {"issued_ms", r.issued_ms}};
      if (!r.done) {
        row["outcome"] = "pending";
      } else {
        row["transaction_id"] = r.transaction_id;
        row["outcome"] = r.outcome ? std::string(to_string(*r.outcome)) : "ok";
        row["status"] = http_status(r.outcome);
        row["latency_ms"] = r.completed_ms - r.issued_ms;
        if (r.outcome) {
          row["detail"] = r.detail;
          ++fault_counts[std::string(to_string(*r.outcome))];
        } else {
          row["body"] = r.body;
          ++ok;
        }
      }
      requests.push_back(std::move(row));
    }
    Json audit = Json::array();
    for (const auto& rec : fw_.auditor().query({})) {
      audit.push_back(Json::parse(codec::detail::write_json(record_to_message(rec))));
    }
    Json health = Json::array();
    for (const auto& h : fw_.monitor().all()) {
      health.push_back(value_to_json(health_to_value(h)));
    }
    Json registry = Json::array();
    for (const auto& e : fw_.registry().live_entries()) {
      registry.push_back(Json{{"service_id", e.descriptor.service_id},
                              {"capability", e.descriptor.capability.str()},
                              {"granularity", std::string(to_string(e.descriptor.granularity))},
                              {"suspended", e.suspended}});
    }
    Json assertions = Json::array();
    for (auto& r : results_) {
      if (!r.value("passed", false)) ++report.assertions_failed;
      assertions.push_back(r);
    }
    report.document = Json{
        {"scenario", s_.name},
        {"seed", s_.seed},
        {"clock", s_.virtual_clock ? "virtual" : "wall"},
        {"ended_ms", clock_.now()},
        {"requests", std::move(requests)},
        {"audit", std::move(audit)},
        {"events", std::move(events_)},
        {"health", std::move(health)},
        {"registry", std::move(registry)},
        {"dead_letters", fw_.bus().dead_letters().size()},
        {"assertions", std::move(assertions)},
        {"summary",
         Json{{"requests", rows_.size()},
              {"ok", ok},
              {"faults", fault_counts},
              {"audit_records", fw_.auditor().size()},
              {"assertions_failed", report.assertions_failed}}},
    };
    return report;
  }

  void stop_framework() { fw_.stop(); }

 private:
  void issue(const WorkloadItem& w, std::size_t row) {
    const TimeMs now = clock_.now();
    char id[48];
    std::snprintf(id, sizeof id, "req-%06zu", row + 1);
    Message msg{
        .message_id = id,
        .correlation_id = std::nullopt,
        .capability = w.capability,
        .timestamp_ms = now,
        .headers = {},
        .body = w.body,
    };
    ConsumerContract contract{
        .consumer_id = w.consumer_id,
        .capability = w.capability,
        .accepted_format = w.accept,
        .deadline_ms = w.deadline_ms,
        .auth_token = w.token,
    };
    {
      std::lock_guard lock(mu_);
      rows_[row].issued_ms = now;
    }
    fw_.gateway().handle_request(
        contract, codec::encode(msg, w.format), [this, row](GatewayResponse response) {
          std::lock_guard lock(mu_);
          RequestRow& r = rows_[row];
          r.done = true;
          r.completed_ms = clock_.now();
          r.transaction_id = response.transaction_id;
          if (response.result.ok()) {
            r.body = value_to_json(codec::decode(response.result.value()).body);
          } else {
            r.outcome = response.result.error().kind();
            r.detail = response.result.error().detail();
          }
        });
  }

  Json evaluate(const Json& a) {
    std::lock_guard lock(mu_);
    return evaluate_locked(a);
  }

  std::vector<const RequestRow*> matching(const Json& a) const {
    std::vector<const RequestRow*> out;
    const std::string label = json_field::string_or(a, "label", "");
    const TimeMs after = json_field::integer_or(a, "after_ms", 0);
    const TimeMs before = json_field::integer_or(a, "before_ms", INT64_MAX);
    for (const auto& r : rows_) {
      if (!label.empty() && r.label != label) continue;
      if (r.issued_ms < after || r.issued_ms >= before) continue;
      out.push_back(&r);
    }
    return out;
  }

  static bool compare(const Json& a, std::int64_t observed, std::string& detail) {
    const std::int64_t tol = json_field::integer_or(a, "tolerance", 0);
    if (a.contains("equals")) {
      const auto want = json_field::integer(a, "equals");
      if (std::llabs(observed - want) > tol) {
        detail = "expected " + std::to_string(want) + " +/- " + std::to_string(tol) + ", got " +
                 std::to_string(observed);
        return false;
      }
    }
    if (a.contains("at_most") && observed > json_field::integer(a, "at_most")) {
      detail = "expected at most " + std::to_string(json_field::integer(a, "at_most")) +
               ", got " + std::to_string(observed);
      return false;
    }
    if (a.contains("at_least") && observed < json_field::integer(a, "at_least")) {
      detail = "expected at least " + std::to_string(json_field::integer(a, "at_least")) +
               ", got " + std::to_string(observed);
      return false;
    }
    return true;
  }

  Json evaluate_locked(const Json& a) {
    const std::string kind = a["kind"].get<std::string>();
    Json out{{"kind", kind}, {"name", json_field::string_or(a, "name", kind)},
             {"evaluated_ms", clock_.now()}};
    bool passed = true;
    std::string detail;
    if (kind == "latency") {
      Json observed = Json::array();
      std::size_t seen = 0;
      for (const auto* r : matching(a)) {
        if (!r->done || r->outcome) continue;
        ++seen;
        const TimeMs latency = r->completed_ms - r->issued_ms;
        observed.push_back(latency);
        std::string d;
        if (!compare(a, latency, d) && passed) {
          passed = false;
          detail = "request " + std::to_string(r->seq) + ": " + d;
        }
      }
      if (seen == 0) {
        passed = false;
        detail = "no successful request matched";
      }
      out["observed"] = observed.empty() ? Json() : observed[0];
      out["matched"] = seen;
    } else if (kind == "outcome") {
      const std::string expect = json_field::string_or(a, "expect", "");
      const std::string mode = json_field::string_or(a, "mode", "all");
      // 0 means "any status".
      const std::int64_t status = json_field::integer_or(a, "status", 0);
      std::size_t hits = 0, total = 0;
      std::map<std::string, int> seen;
      for (const auto* r : matching(a)) {
        ++total;
        const std::string got =
            !r->done ? "pending" : r->outcome ? std::string(to_string(*r->outcome)) : "ok";
        ++seen[got];
        bool hit = expect.empty() || got == expect;
        if (hit && status != 0 && (!r->done || http_status(r->outcome) != status)) hit = false;
        if (hit) ++hits;
      }
      if (mode == "all") passed = total > 0 && hits == total;
      if (mode == "any") passed = hits > 0;
      if (mode == "none") passed = hits == 0;
      out["observed"] = seen;
      out["matched"] = total;
      if (!passed) {
        const std::string what =
            (expect.empty() ? std::string("any outcome") : expect) +
            (status != 0 ? " with status " + std::to_string(status) : std::string());
        detail = std::to_string(hits) + " of " + std::to_string(total) + " requests matched " +
                 what + " (mode " + mode + ")";
      }
    } else if (kind == "classification") {
      const auto c = fw_.monitor().classification(a["service"].get<std::string>());
      const std::string got = c ? std::string(to_string(*c)) : "none";
      out["observed"] = got;
      passed = got == a["expect"].get<std::string>();
    } else if (kind == "breaker" || kind == "health") {
      const auto h = fw_.monitor().health(a["service"].get<std::string>());
      std::string got = "untracked";
      if (h) {
        got = kind == "breaker" ? std::string(to_string(h->breaker))
                                : std::string(to_string(h->status));
      }
      out["observed"] = got;
      passed = got == a["expect"].get<std::string>();
    } else if (kind == "discoverable") {
      const auto providers =
          fw_.registry().discover(Capability::parse(a["capability"].get<std::string>()));
      out["observed"] = !providers.empty();
      passed = !providers.empty() == a["expect"].get<bool>();
    } else if (kind == "audit_count") {
      const auto n = static_cast<std::int64_t>(fw_.auditor().size());
      out["observed"] = n;
      Json want = a;
      if (!a.contains("equals") && !a.contains("at_most") && !a.contains("at_least")) {
        want["equals"] = static_cast<std::int64_t>(rows_.size());
      }
      passed = compare(want, n, detail);
    } else if (kind == "event_count") {
      const TopicPattern pattern = TopicPattern::parse(a["topic"].get<std::string>());
      std::int64_t n = 0;
      for (const auto& e : events_) {
        if (pattern.matches(e["topic"].get<std::string>()) && e["attempt"] == 1) ++n;
      }
      out["observed"] = n;
      passed = compare(a, n, detail);
    }
    if (!passed && detail.empty() && out.contains("observed")) {
      detail = "observed " + out["observed"].dump();
    }
    out["passed"] = passed;
    if (!detail.empty()) out["detail"] = detail;
    return out;
  }

  const Scenario& s_;
  Scheduler& clock_;
  Fleet fleet_;
  Framework fw_;
  std::mutex mu_;
  std::optional<Subscription> events_sub_;
  Json events_ = Json::array();
  std::vector<RequestRow> rows_;
  std::vector<Json> results_;
};

}  // namespace

Scenario parse_scenario(const Json& doc, std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) bad("scenario must be a JSON object");
  json_field::reject_unknown(doc,
                             {"name", "clock", "config", "tokens", "devices", "faults",
                              "composites", "splits", "workload", "assertions", "run_until_ms"},
                             "scenario");
  Scenario s;
  s.name = json_field::string_or(doc, "name", "");
  if (doc.contains("clock")) {
    const Json& c = doc["clock"];
    json_field::reject_unknown(c, {"mode", "seed"}, "clock");
    const std::string mode = json_field::string_or(c, "mode", "virtual");
    if (mode != "virtual" && mode != "wall") bad("clock mode must be virtual or wall");
    s.virtual_clock = mode == "virtual";
    s.seed = static_cast<std::uint64_t>(json_field::integer_or(c, "seed", 0));
  }
  if (seed_override) s.seed = *seed_override;
  if (doc.contains("config")) {
    if (!doc["config"].is_object()) bad("config must be an object");
    flatten_config(doc["config"], "", s.config);
  }
  if (doc.contains("tokens")) {
    for (const auto& [token, consumer] : doc["tokens"].items()) {
      if (!consumer.is_string()) bad("token '" + token + "' must map to a consumer id");
      s.config.tokens[token] = consumer.get<std::string>();
    }
  }
  auto array = [&](std::string_view key) -> const Json& {
    static const Json empty = Json::array();
    if (!doc.contains(key)) return empty;
    const Json& v = doc[std::string(key)];
    if (!v.is_array()) bad(std::string(key) + " must be an array");
    return v;
  };
  for (const auto& d : array("devices")) s.devices.push_back(profile_from_json(d, s.seed));
  for (const auto& f : array("faults")) s.faults.push_back(fault_from_json(f));
  for (const auto& c : array("composites")) s.composites.push_back(composite_from_json(c));
  for (const auto& sp : array("splits")) {
    Json mapping = sp;
    TimeMs at = 0;
    if (sp.is_object() && sp.contains("at_ms")) {
      at = json_field::integer(sp, "at_ms");
      mapping.erase("at_ms");
    }
    s.splits.push_back(TimedSplit{at, split_from_json(mapping)});
  }
  TimeMs last = 0;
  for (const auto& w : array("workload")) {
    s.workload.push_back(workload_from_json(w));
    if (s.workload.back().at_ms < last) bad("workload items must be sorted by at_ms");
    last = s.workload.back().at_ms;
  }
  for (const auto& a : array("assertions")) {
    check_assertion(a);
    s.assertions.push_back(a);
  }
  if (doc.contains("run_until_ms")) s.run_until_ms = json_field::integer(doc, "run_until_ms");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path,
                       std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) bad("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    bad("scenario " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_scenario(doc, seed_override);
}

std::string ScenarioReport::render() const { return document.dump(2) + "\n"; }

ScenarioReport run_scenario(const Scenario& scenario) {
  if (scenario.virtual_clock) {
    VirtualScheduler clock(0);
    Runner runner(scenario, clock);
    runner.setup();
    clock.run_until(runner.end_time());
    return runner.finish();
  }
  WallScheduler clock;
  std::optional<ScenarioReport> report;
  {
    Runner runner(scenario, clock);
    runner.setup();
    const TimeMs end = runner.end_time();
    while (clock.now() < end) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          std::min<TimeMs>(50, std::max<TimeMs>(1, end - clock.now()))));
    }
    runner.stop_framework();
    report = runner.finish();
    clock.shutdown();
  }
  return std::move(*report);
}

}  // namespace iotmesh
