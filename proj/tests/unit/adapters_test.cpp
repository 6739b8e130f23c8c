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

#include <gtest/gtest.h>
#include <httplib.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fstream>
#include <future>
#include <random>
#include <sstream>

#include "iotmesh/adapters/http_binding.hpp"
#include "iotmesh/adapters/pubsub_binding.hpp"
#include "iotmesh/codec/codec.hpp"
#include "iotmesh/gateway/status.hpp"
#include "iotmesh/sim/fleet.hpp"

namespace iotmesh {
namespace {

Capability cap(std::string_view s) { return Capability::parse(s); }

// ---------------------------------------------------------------- bindings

class NullBinding final : public Binding {
 public:
  explicit NullBinding(Protocol p, bool fail = false) : protocol_(p), fail_(fail) {}
  const std::string& binding_id() const noexcept override { return id_; }
  Protocol protocol() const noexcept override { return protocol_; }
  Lifecycle start() override {
    if (fail_) throw_error(ErrorKind::ContractViolation, "busy");
    state_ = Lifecycle::Running;
    return state_;
  }
  Lifecycle stop() override {
    state_ = Lifecycle::Stopped;
    return state_;
  }
  Lifecycle state() const override { return state_; }
  Endpoint endpoint() const override { return {}; }

 private:
  std::string id_ = "null";
  Protocol protocol_;
  bool fail_;
  Lifecycle state_ = Lifecycle::Stopped;
};

TEST(BindingSet, OneBindingPerProtocol) {
  BindingSet set;
  set.add(std::make_unique<NullBinding>(Protocol::RequestWire));
  set.add(std::make_unique<NullBinding>(Protocol::PubSubWire));
  try {
    set.add(std::make_unique<NullBinding>(Protocol::RequestWire));
    FAIL() << "second request binding accepted";
  } catch (const FrameworkError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ContractViolation);
  }
  EXPECT_EQ(set.size(), 2u);
}

TEST(BindingSet, FailedStartRollsBack) {
  BindingSet set;
  auto& first = set.add(std::make_unique<NullBinding>(Protocol::RequestWire));
  set.add(std::make_unique<NullBinding>(Protocol::PubSubWire, true));
  EXPECT_THROW(set.start_all(), FrameworkError);
  EXPECT_EQ(first.state(), Lifecycle::Stopped);
}

// -------------------------------------------------------------- status map

TEST(StatusMap, TableAndInverse) {
  const std::map<ErrorKind, int> table = {
      {ErrorKind::UnauthorisedAccess, 401}, {ErrorKind::NotFound, 404},
      {ErrorKind::TimingFault, 408},        {ErrorKind::OmissionFailure, 408},
      {ErrorKind::ContractViolation, 422},  {ErrorKind::CrashFailure, 502},
      {ErrorKind::TransientFault, 503},
  };
  ASSERT_EQ(table.size(), kAllErrorKinds.size());
  EXPECT_EQ(http_status(std::nullopt), 200);
  for (auto [kind, status] : table) {
    EXPECT_EQ(http_status(kind), status) << to_string(kind);
    auto back = error_for_status(status);
    ASSERT_TRUE(back);
    // 408 is shared; it reads back as a timing fault.
    EXPECT_EQ(*back, kind == ErrorKind::OmissionFailure ? ErrorKind::TimingFault : kind);
  }
  EXPECT_FALSE(error_for_status(200));
  EXPECT_FALSE(error_for_status(500));
}

// -------------------------------------------------------------------- HTTP

struct HttpRig {
  WallScheduler clock;
  Fleet fleet{clock};
  std::unique_ptr<Framework> fw;
  std::unique_ptr<HttpBinding> http;
  std::unique_ptr<httplib::Client> client;

  explicit HttpRig(HttpBinding::Dispatch dispatch = {}) {
    FrameworkConfig config;
    config.tokens["tok-dash"] = "dashboard";
    config.monitor_enabled = false;
    fw = std::make_unique<Framework>(clock, fleet, config);
    fleet.attach(fw->registry(), &fw->bus(), &fw->device_keys());
    http = std::make_unique<HttpBinding>(*fw, HttpBinding::Options{.dispatch = std::move(dispatch)});
    http->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", http->endpoint().port);
    client->set_read_timeout(std::chrono::seconds(10));
  }
  ~HttpRig() {
    http->stop();
    clock.shutdown();
  }

  void spawn_temperature(std::string id, WireFormat format, TimeMs delay = 20) {
    DeviceProfile p;
    p.device_id = std::move(id);
    p.capabilities.push_back(DeviceCapability{.capability = cap("weather.temperature.read"),
                                              .processing_delay_ms = delay,
                                              .format = format});
    p.capabilities.back().generator.value =
        Value(Value::Map{{"temp_c", Value(21.5)}, {"station", Value("north & <east>")}});
    fleet.spawn_device(p);
  }

  httplib::Result call(const std::string& capability, const std::string& body,
                       httplib::Headers headers) {
    return client->Post("/svc/" + capability, headers, body, "application/json");
  }
};

std::string request_json(const std::string& capability) {
  return codec::detail::write_json(Message{.message_id = "req-1",
                                           .correlation_id = std::nullopt,
                                           .capability = cap(capability),
                                           .timestamp_ms = 0,
                                           .headers = {},
                                           .body = Value(Value::Map{})});
}

TEST(HttpBinding, EveryErrorKindMapsToItsStatus) {
  std::atomic<int> which{0};
  HttpRig rig([&](const ConsumerContract&, EncodedMessage, Gateway::Done done) {
    const ErrorKind kind = kAllErrorKinds[which.load()];
    done(GatewayResponse{FrameworkError(kind, "injected"), "tx-000042"});
  });
  for (std::size_t i = 0; i < kAllErrorKinds.size(); ++i) {
    which = static_cast<int>(i);
    auto res = rig.call("weather.temperature.read", request_json("weather.temperature.read"),
                        {{"x-auth-token", "tok-dash"}});
    ASSERT_TRUE(res);
    const ErrorKind kind = kAllErrorKinds[i];
    EXPECT_EQ(res->status, http_status(kind)) << to_string(kind);
    Json body = Json::parse(res->body);
    EXPECT_EQ(body["error"], std::string(to_string(kind)));
    EXPECT_EQ(body["detail"], "injected");
    EXPECT_EQ(body["transaction_id"], "tx-000042");
    EXPECT_EQ(res->get_header_value("x-transaction-id"), "tx-000042");
    // Reading the status back recovers the kind, 408 aside.
    auto back = error_for_status(res->status);
    ASSERT_TRUE(back);
    if (res->status != 408) {
      EXPECT_EQ(*back, kind);
    }
  }
}

TEST(HttpBinding, JsonProducerServedToXmlConsumer) {
  HttpRig rig;
  rig.spawn_temperature("dev-y", WireFormat::Json);
  auto res = rig.call("weather.temperature.read", request_json("weather.temperature.read"),
                      {{"x-auth-token", "tok-dash"}, {"accept", "application/xml"}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(res->get_header_value("content-type"), "application/xml");
  Message m = codec::decode(EncodedMessage{.format = WireFormat::Xml,
                                           .bytes = res->body,
                                           .declared_capability = cap("weather.temperature.read")});
  EXPECT_EQ(m.body, Value(Value::Map{{"temp_c", Value(21.5)},
                                     {"station", Value("north & <east>")}}));
  EXPECT_EQ(m.correlation_id, "req-1");
  EXPECT_EQ(m.message_id, res->get_header_value("x-transaction-id"));
}

TEST(HttpBinding, EmptyBodyAndDefaultsAreAccepted) {
  HttpRig rig;
  rig.spawn_temperature("dev-y", WireFormat::Xml);
  auto res = rig.client->Post("/svc/weather.temperature.read", {{"x-auth-token", "tok-dash"}},
                              "", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(res->get_header_value("content-type"), "application/json");
}

TEST(HttpBinding, ConsumerErrors) {
  HttpRig rig;
  rig.spawn_temperature("dev-y", WireFormat::Json);
  auto body = request_json("weather.temperature.read");
  auto missing = rig.call("weather.temperature.read", body, {});
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 401);
  auto wrong = rig.call("weather.temperature.read", body, {{"x-auth-token", "nope"}});
  EXPECT_EQ(wrong->status, 401);
  auto unknown = rig.call("weather.pressure.read", request_json("weather.pressure.read"),
                          {{"x-auth-token", "tok-dash"}});
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(Json::parse(unknown->body)["error"], "NotFound");
  auto garbage = rig.call("weather.temperature.read", "{not json",
                          {{"x-auth-token", "tok-dash"}});
  EXPECT_EQ(garbage->status, 422);
  auto deadline = rig.call("weather.temperature.read", body,
                           {{"x-auth-token", "tok-dash"}, {"x-deadline-ms", "soon"}});
  EXPECT_EQ(deadline->status, 422);
  auto media = rig.client->Post("/svc/weather.temperature.read", {{"x-auth-token", "tok-dash"}},
                                body, "text/plain");
  EXPECT_EQ(media->status, 422);
  auto bad_cap = rig.call("Weather!", body, {{"x-auth-token", "tok-dash"}});
  EXPECT_EQ(bad_cap->status, 422);
  auto nowhere = rig.client->Get("/nowhere");
  EXPECT_EQ(nowhere->status, 404);
  EXPECT_EQ(Json::parse(nowhere->body)["error"], "NotFound");
}

TEST(HttpBinding, DeadlineHeaderIsHonoured) {
  HttpRig rig;
  rig.spawn_temperature("dev-slow", WireFormat::Json, 400);
  auto res = rig.call("weather.temperature.read", request_json("weather.temperature.read"),
                      {{"x-auth-token", "tok-dash"}, {"x-deadline-ms", "100"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 408);
  EXPECT_EQ(Json::parse(res->body)["error"], "TimingFault");
}

Message envelope(const httplib::Result& res) {
  return codec::detail::read_json(res->body, Message::kMaxDepth);
}

TEST(HttpBinding, RegistryHealthAndAdmin) {
  HttpRig rig;
  rig.spawn_temperature("dev-y", WireFormat::Json);
  auto reg = rig.client->Get("/registry");
  ASSERT_TRUE(reg);
  ASSERT_EQ(reg->status, 200);
  Message m = envelope(reg);
  EXPECT_EQ(m.capability.str(), "framework.registry.list");
  ASSERT_EQ(m.body.find("services")->as_list().size(), 1u);
  EXPECT_EQ(*m.body.find("services")->as_list()[0].find("service_id"),
            Value("dev-y/weather.temperature.read"));

  auto health = rig.client->Get("/health/dev-y/weather.temperature.read");
  ASSERT_EQ(health->status, 200);
  EXPECT_EQ(*envelope(health).body.find("status"), Value("up"));
  EXPECT_EQ(rig.client->Get("/health/ghost")->status, 404);

  const std::string spec = R"({"capability": "weather.report.read",
    "members": ["weather.temperature.read", "weather.temperature.read"],
    "merge": [{"member": 0, "from": "temp_c", "to": "t"}], "mode": "parallel"})";
  EXPECT_EQ(rig.client->Post("/admin/composites", spec, "application/json")->status, 401);
  auto ok = rig.client->Post("/admin/composites", {{"x-auth-token", "tok-dash"}}, spec,
                             "application/json");
  ASSERT_EQ(ok->status, 200) << ok->body;
  EXPECT_EQ(rig.client->Post("/admin/composites", {{"x-auth-token", "tok-dash"}}, "[]",
                             "application/json")->status,
            422);
  m = envelope(rig.client->Get("/registry"));
  ASSERT_EQ(m.body.find("composites")->as_list().size(), 1u);

  const std::string split = R"({"coarse": "weather.summary.read",
    "fines": ["weather.temperature.read", "weather.temperature.read"],
    "merge": [{"member": 0, "from": "temp_c", "to": "t"}], "mode": "parallel"})";
  auto s = rig.client->Post("/admin/splits", {{"x-auth-token", "tok-dash"}}, split,
                            "application/json");
  ASSERT_EQ(s->status, 200) << s->body;
  auto served = rig.call("weather.summary.read", request_json("weather.summary.read"),
                         {{"x-auth-token", "tok-dash"}});
  ASSERT_EQ(served->status, 200) << served->body;
}

TEST(HttpBinding, AuditLongPoll) {
  HttpRig rig;
  rig.spawn_temperature("dev-y", WireFormat::Json);
  EXPECT_EQ(rig.client->Get("/audit")->status, 401);
  httplib::Headers auth{{"x-auth-token", "tok-dash"}};
  auto empty = rig.client->Get("/audit?after=0", auth);
  ASSERT_EQ(empty->status, 200);
  EXPECT_TRUE(empty->body.empty());

  auto waiting = std::async(std::launch::async, [&] {
    httplib::Client c("127.0.0.1", rig.http->endpoint().port);
    return c.Get("/audit?after=0&wait_ms=5000", auth);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  rig.call("weather.temperature.read", request_json("weather.temperature.read"), auth);
  auto res = waiting.get();
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  std::istringstream lines(res->body);
  std::string line;
  std::vector<Message> records;
  while (std::getline(lines, line)) {
    records.push_back(codec::detail::read_json(line, Message::kMaxDepth));
  }
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(*records[0].body.find("seq"), Value(1));
  EXPECT_EQ(rig.client->Get("/audit?after=1", auth)->body, "");
  EXPECT_EQ(rig.client->Get("/audit?after=-3", auth)->status, 422);
}

TEST(HttpBinding, StartIsIdempotentAndBusyPortIsAContractViolation) {
  HttpRig rig;
  const int port = rig.http->endpoint().port;
  EXPECT_EQ(rig.http->start(), Lifecycle::Running);
  EXPECT_EQ(rig.http->endpoint().port, port);

  HttpBinding other(*rig.fw, HttpBinding::Options{.endpoint = {"127.0.0.1", port}});
  try {
    other.start();
    FAIL() << "bound a busy port";
  } catch (const FrameworkError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ContractViolation);
  }
  EXPECT_EQ(other.state(), Lifecycle::Stopped);
  EXPECT_EQ(rig.http->stop(), Lifecycle::Stopped);
  EXPECT_EQ(rig.http->stop(), Lifecycle::Stopped);
}

TEST(HttpBinding, StopDrainsInFlightRequests) {
  HttpRig rig;
  rig.spawn_temperature("dev-slow", WireFormat::Json, 300);
  auto pending = std::async(std::launch::async, [&] {
    return rig.call("weather.temperature.read", request_json("weather.temperature.read"),
                    {{"x-auth-token", "tok-dash"}});
  });
  while (rig.http->in_flight() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  rig.http->stop();
  auto res = pending.get();
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(rig.http->state(), Lifecycle::Stopped);
}

// ------------------------------------------------------------- pub/sub

struct SessionRig {
  VirtualScheduler clock;
  EventBus bus{clock};
  PubSubSession session;
  explicit SessionRig(PubSubSession::Options o = {}) : session(bus, clock, "ps1", o) {}

  std::vector<std::string> send(std::string_view line) {
    session.handle_line(line);
    clock.run_until(clock.now());
    return session.take_output();
  }
};

TEST(PubSubSession, GoldenTranscript) {
  std::ifstream in(std::string(IOTMESH_GOLDEN_DIR) + "/pubsub_transcript.txt");
  ASSERT_TRUE(in);
  SessionRig rig;
  std::vector<std::string> expected;
  std::vector<std::string> actual;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("> ", 0) == 0) {
      for (auto& f : rig.send(line.substr(2))) actual.push_back(std::move(f));
    } else if (line.rfind("< ", 0) == 0) {
      expected.push_back(line.substr(2));
    } else if (line.rfind("@ ", 0) == 0) {
      rig.clock.advance(std::stoll(line.substr(2)));
      for (auto& f : rig.session.take_output()) actual.push_back(std::move(f));
    }
  }
  EXPECT_EQ(actual, expected);
}

TEST(PubSubSession, MalformedLinesGetErrAndTheSessionCarriesOn) {
  SessionRig rig;
  for (std::string_view bad : {"{", "[1,2]", "\"str\"", R"({"op":"fly"})", R"({"op":"pub"})",
                               R"({"op":"pub","topic":"a.+","payload":1})",
                               R"({"op":"sub","pattern":"a..b"})",
                               R"({"op":"ack","subscription":"x","delivery_id":"e"})",
                               R"({"op":"pub","topic":"a.b","payload":1,"extra":true})"}) {
    auto out = rig.send(bad);
    ASSERT_EQ(out.size(), 1u) << bad;
    EXPECT_EQ(Json::parse(out[0])["op"], "err") << bad;
  }
  auto ok = rig.send(R"({"op":"pub","topic":"a.b","payload":1})");
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(Json::parse(ok[0])["op"], "ok");
}

TEST(PubSubSession, EveryLineIsAnsweredExactlyOnce) {
  SessionRig rig;
  std::mt19937_64 rng(99);
  const std::vector<std::string> pieces = {
      "{", "}", "\"op\"", ":", "\"pub\"", "\"sub\"", "\"ack\"", ",", "\"topic\"", "\"a.b\"",
      "\"payload\"", "1", "[", "]", "\"pattern\"", "\"#\"", "null", "\xff", "\"ref\""};
  rig.send(R"({"op":"sub","pattern":"#","ack":"auto"})");
  for (int i = 0; i < 2000; ++i) {
    std::string line;
    const int n = static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) line += pieces[rng() % pieces.size()];
    rig.session.handle_line(line);
    auto out = rig.session.take_output();
    ASSERT_EQ(out.size(), 1u) << line;
    const std::string op = Json::parse(out[0])["op"];
    EXPECT_TRUE(op == "ok" || op == "err") << out[0];
    rig.clock.run_until(rig.clock.now());
    rig.session.take_output();
  }
}

TEST(PubSubSession, HundredReadingsAllObserved) {
  SessionRig device;
  SessionRig* d = &device;
  PubSubSession consumer(d->bus, d->clock, "ps2");
  consumer.handle_line(R"({"op":"sub","pattern":"weather.temperature.updated","ack":"auto"})");
  int observed = 0;
  for (int i = 0; i < 100; ++i) {
    auto out = d->send(R"({"op":"pub","topic":"weather.temperature.updated","payload":{"temp_c":)" +
                       std::to_string(i) + "}}");
    ASSERT_EQ(Json::parse(out.at(0))["op"], "ok");
    for (const auto& f : consumer.take_output()) observed += Json::parse(f)["op"] == "evt";
  }
  EXPECT_EQ(observed, 100);
  EXPECT_EQ(d->bus.outstanding(), 0u);
}

TEST(PubSubSession, ManualAckAndRedelivery) {
  SessionRig rig;
  auto sub = Json::parse(rig.send(R"({"op":"sub","pattern":"a.#","ref":7})").at(0));
  EXPECT_EQ(sub["ref"], 7);
  const auto sid = sub["subscription"].get<std::uint64_t>();
  auto out = rig.send(R"({"op":"pub","topic":"a.b","payload":{"x":1}})");
  ASSERT_EQ(out.size(), 2u);
  Json evt = Json::parse(out[1]);
  EXPECT_EQ(evt["op"], "evt");
  EXPECT_EQ(evt["attempt"], 1);
  rig.clock.advance(2000);
  auto again = rig.session.take_output();
  ASSERT_EQ(again.size(), 1u);
  EXPECT_EQ(Json::parse(again[0])["attempt"], 2);
  auto ack = rig.send(Json{{"op", "ack"}, {"subscription", sid},
                           {"delivery_id", evt["delivery_id"]}}.dump());
  EXPECT_EQ(Json::parse(ack.at(0))["op"], "ok");
  rig.clock.advance(10000);
  EXPECT_TRUE(rig.session.take_output().empty());
  auto twice = rig.send(Json{{"op", "ack"}, {"subscription", sid},
                             {"delivery_id", evt["delivery_id"]}}.dump());
  EXPECT_EQ(Json::parse(twice.at(0))["op"], "err");
}

TEST(PubSubSession, FullQueueRefusesDeliveriesUntilDrained) {
  SessionRig rig(PubSubSession::Options{.max_queue = 3});
  PubSubSession publisher(rig.bus, rig.clock, "pub");
  rig.send(R"({"op":"sub","pattern":"a.b","ack":"auto"})");
  for (int i = 0; i < 5; ++i) {
    publisher.handle_line(R"({"op":"pub","topic":"a.b","payload":)" + std::to_string(i) + "}");
  }
  rig.clock.run_until(rig.clock.now());
  // Per-topic FIFO holds events behind the refused head, so at most the
  // queue bound is buffered.
  auto first = rig.session.take_output();
  EXPECT_LE(first.size(), 3u);
  std::vector<int> seen;
  for (const auto& f : first) seen.push_back(Json::parse(f)["payload"].get<int>());
  for (int round = 0; round < 20 && seen.size() < 5; ++round) {
    rig.clock.advance(2000);
    for (const auto& f : rig.session.take_output()) {
      seen.push_back(Json::parse(f)["payload"].get<int>());
    }
  }
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(PubSubSession, PublishIsRefusedWhileTheQueueIsFull) {
  SessionRig rig(PubSubSession::Options{.max_queue = 2});
  rig.session.handle_line("{");
  rig.session.handle_line("{");
  rig.session.handle_line(R"({"op":"pub","topic":"a.b","payload":1})");
  auto out = rig.session.take_output();
  ASSERT_EQ(out.size(), 3u);
  Json refused = Json::parse(out[2]);
  EXPECT_EQ(refused["op"], "err");
  EXPECT_EQ(refused["code"], 503);
}

// TCP round trip through the real binding.
class LineClient {
 public:
  explicit LineClient(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) fd_ = -1;
  }
  ~LineClient() {
    if (fd_ >= 0) ::close(fd_);
  }
  bool connected() const { return fd_ >= 0; }
  void send(const std::string& line) {
    const std::string data = line + "\n";
    ASSERT_EQ(::send(fd_, data.data(), data.size(), MSG_NOSIGNAL),
              static_cast<ssize_t>(data.size()));
  }
  std::string read_line() {
    for (;;) {
      auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return line;
      }
      char chunk[1024];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return "";
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

TEST(PubSubBinding, TcpRoundTrip) {
  WallScheduler clock;
  {
    EventBus bus(clock);
    PubSubBinding binding(bus, clock, {});
    ASSERT_EQ(binding.start(), Lifecycle::Running);
    EXPECT_EQ(binding.start(), Lifecycle::Running);
    const int port = binding.endpoint().port;
    ASSERT_GT(port, 0);

    LineClient sub(port), pub(port);
    ASSERT_TRUE(sub.connected() && pub.connected());
    sub.send(R"({"op":"sub","pattern":"weather.#","ack":"auto"})");
    EXPECT_EQ(Json::parse(sub.read_line())["op"], "ok");
    pub.send("this is not json");
    EXPECT_EQ(Json::parse(pub.read_line())["op"], "err");
    pub.send(R"({"op":"pub","topic":"weather.temperature.updated","payload":{"temp_c":21}})");
    EXPECT_EQ(Json::parse(pub.read_line())["op"], "ok");
    Json evt = Json::parse(sub.read_line());
    EXPECT_EQ(evt["op"], "evt");
    EXPECT_EQ(evt["payload"]["temp_c"], 21);

    PubSubBinding other(bus, clock, PubSubBinding::Options{.endpoint = {"127.0.0.1", port}});
    EXPECT_THROW(other.start(), FrameworkError);

    EXPECT_EQ(binding.stop(), Lifecycle::Stopped);
    EXPECT_EQ(binding.stop(), Lifecycle::Stopped);
    EXPECT_EQ(sub.read_line(), "");
  }
  clock.shutdown();
}

}  // namespace
}  // namespace iotmesh
