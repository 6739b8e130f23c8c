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

#include "iotmesh/adapters/http_binding.hpp"

#include <httplib.h>

#include <charconv>
#include <future>

#include "iotmesh/codec/codec.hpp"
#include "iotmesh/gateway/status.hpp"

namespace iotmesh {

namespace {

constexpr const char* kJsonType = "application/json";
constexpr const char* kNdjsonType = "application/x-ndjson";

void send_error(httplib::Response& res, const FrameworkError& e) {
  res.status = http_status(e.kind());
  Json body{{"error", std::string(to_string(e.kind()))},
            {"detail", e.detail()},
            {"transaction_id", e.transaction_id() ? Json(*e.transaction_id()) : Json()}};
  if (e.transaction_id()) res.set_header("x-transaction-id", *e.transaction_id());
  res.set_content(body.dump(), kJsonType);
}

std::optional<WireFormat> format_from_content_type(const std::string& header) {
  const std::string type = header.substr(0, header.find(';'));
  if (type.empty() || type == "application/json") return WireFormat::Json;
  if (type == "application/xml" || type == "text/xml") return WireFormat::Xml;
  return std::nullopt;
}

WireFormat format_from_accept(const std::string& header) {
  const auto xml = std::min(header.find("application/xml"), header.find("text/xml"));
  const auto json = header.find("application/json");
  return xml < json ? WireFormat::Xml : WireFormat::Json;
}

std::int64_t header_int(const httplib::Request& req, const char* name, std::int64_t fallback) {
  if (!req.has_header(name)) return fallback;
  const std::string text = req.get_header_value(name);
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw_error(ErrorKind::ContractViolation,
                std::string(name) + " must be an integer, got '" + text + "'");
  }
  return v;
}

std::int64_t param_int(const httplib::Request& req, const char* name, std::int64_t fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || v < 0) {
    throw_error(ErrorKind::ContractViolation,
                std::string(name) + " must be a non-negative integer");
  }
  return v;
}

Json parse_json_body(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw_error(ErrorKind::ContractViolation, std::string("body is not valid JSON: ") + e.what());
  }
}

}  // namespace

struct HttpBinding::Server {
  httplib::Server http;
  IdGenerator ids{"http-"};
};

HttpBinding::HttpBinding(Framework& framework, Options options)
    : fw_(framework), options_(std::move(options)) {
  if (!options_.dispatch) {
    options_.dispatch = [this](const ConsumerContract& c, EncodedMessage m, Gateway::Done d) {
      fw_.gateway().handle_request(c, std::move(m), std::move(d));
    };
  }
}

HttpBinding::~HttpBinding() { stop(); }

Lifecycle HttpBinding::state() const {
  std::lock_guard lock(mu_);
  return server_ ? Lifecycle::Running : Lifecycle::Stopped;
}

Endpoint HttpBinding::endpoint() const {
  std::lock_guard lock(mu_);
  Endpoint e = options_.endpoint;
  if (server_) e.port = bound_port_;
  return e;
}

Lifecycle HttpBinding::start() {
  std::lock_guard lock(mu_);
  if (server_) return Lifecycle::Running;
  auto server = std::make_unique<Server>();
  Server* s = server.get();
  auto& http = s->http;
  http.set_keep_alive_max_count(1);
  // The library default enables SO_REUSEPORT, which would let a second
  // binding share a busy port.
  http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });

  // Wraps a JsonForm envelope around framework data.
  auto envelope = [this, s](const char* capability, Value body) {
    return codec::detail::write_json(Message{
        .message_id = s->ids.next(),
        .correlation_id = std::nullopt,
        .capability = Capability::parse(capability),
        .timestamp_ms = fw_.scheduler().now(),
        .headers = {},
        .body = std::move(body),
    });
  };
  auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const FrameworkError& e) {
        send_error(res, e);
      }
    };
  };
  auto require_token = [this](const httplib::Request& req) {
    return fw_.authenticator().authenticate(req.get_header_value("x-auth-token"));
  };

  http.Post(R"(/svc/([^/]+))", guarded([this, s](const httplib::Request& req,
                                                 httplib::Response& res) {
    ++in_flight_;
    struct Leave {
      std::atomic<std::size_t>& n;
      ~Leave() { --n; }
    } leave{in_flight_};

    const Capability capability = Capability::parse(req.matches[1].str());
    auto format = format_from_content_type(req.get_header_value("content-type"));
    if (!format) {
      throw_error(ErrorKind::ContractViolation,
                  "unsupported content-type '" + req.get_header_value("content-type") + "'");
    }
    ConsumerContract contract{
        .consumer_id = "",
        .capability = capability,
        .accepted_format = format_from_accept(req.get_header_value("accept")),
        .deadline_ms = header_int(req, "x-deadline-ms", fw_.config().default_deadline_ms),
        .auth_token = req.get_header_value("x-auth-token"),
    };
    EncodedMessage payload{.format = *format, .bytes = req.body, .declared_capability = capability};
    if (req.body.empty()) {
      payload = codec::encode(Message{.message_id = s->ids.next(),
                                      .correlation_id = std::nullopt,
                                      .capability = capability,
                                      .timestamp_ms = fw_.scheduler().now(),
                                      .headers = {},
                                      .body = Value()},
                              *format);
    }

    auto promise = std::make_shared<std::promise<GatewayResponse>>();
    auto future = promise->get_future();
    const TimeMs deadline = contract.deadline_ms;
    options_.dispatch(contract, std::move(payload),
                      [promise](GatewayResponse r) { promise->set_value(std::move(r)); });
    // The gateway always answers by its deadline; the margin only guards
    // against a dispatch target that never calls back.
    if (future.wait_for(std::chrono::milliseconds(std::max<TimeMs>(deadline, 0) + 5000)) !=
        std::future_status::ready) {
      throw FrameworkError(ErrorKind::TimingFault, "no response from the gateway");
    }
    GatewayResponse response = future.get();
    if (!response.result.ok()) {
      FrameworkError e = response.result.error();
      if (!e.transaction_id() && !response.transaction_id.empty()) {
        e = e.with_transaction(response.transaction_id);
      }
      send_error(res, e);
      return;
    }
    const EncodedMessage& out = response.result.value();
    res.status = 200;
    res.set_header("x-transaction-id", response.transaction_id);
    res.set_content(out.bytes, std::string(codec::content_type(out.format)));
  }));

  http.Get("/registry", guarded([this, envelope](const httplib::Request&, httplib::Response& res) {
    Value::List services;
    for (const auto& e : fw_.registry().live_entries()) {
      Json d = descriptor_to_json(e.descriptor);
      d["suspended"] = e.suspended;
      d["lease_expires_ms"] = e.lease.expires_at_ms;
      services.push_back(value_from_json(d));
    }
    Value::List composites;
    for (const auto& c : fw_.registry().composites()) {
      composites.push_back(value_from_json(composite_to_json(c)));
    }
    Value::List splits;
    for (const auto& m : fw_.gateway().splits()) splits.push_back(value_from_json(split_to_json(m)));
    res.set_content(envelope("framework.registry.list",
                             Value(Value::Map{{"services", Value(std::move(services))},
                                              {"composites", Value(std::move(composites))},
                                              {"splits", Value(std::move(splits))}})),
                    kJsonType);
  }));

  http.Get(R"(/health/(.+))", guarded([this, envelope](const httplib::Request& req,
                                                       httplib::Response& res) {
    const std::string id = req.matches[1].str();
    auto health = fw_.monitor().health(id);
    if (!health) {
      if (!fw_.registry().last_known(id)) throw_error(ErrorKind::NotFound, "unknown service " + id);
      health = HealthState{.service_id = id};
    }
    res.set_content(envelope("framework.health.read", health_to_value(*health)), kJsonType);
  }));

  http.Get("/audit", guarded([this, require_token](const httplib::Request& req,
                                                   httplib::Response& res) {
    require_token(req);
    const auto after = static_cast<std::uint64_t>(param_int(req, "after", 0));
    const auto wait = std::min<std::int64_t>(param_int(req, "wait_ms", 0), options_.max_wait_ms);
    const auto limit = param_int(req, "limit", 0);
    std::vector<AuditRecord> records =
        wait > 0 ? fw_.auditor().wait_after(after, std::chrono::milliseconds(wait))
                 : fw_.auditor().query(AuditQuery{.after_seq = after});
    if (limit > 0 && records.size() > static_cast<std::size_t>(limit)) records.erase(records.begin() + limit, records.end());
    std::string out;
    for (const auto& r : records) {
      out += codec::detail::write_json(record_to_message(r));
      out += '\n';
    }
    res.set_content(out, kNdjsonType);
  }));

  http.Post("/admin/composites", guarded([this, envelope, require_token](
                                             const httplib::Request& req,
                                             httplib::Response& res) {
    require_token(req);
    CompositeSpec spec = composite_from_json(parse_json_body(req.body));
    const std::string name = spec.capability.str();
    fw_.registry().register_composite(std::move(spec));
    res.set_content(envelope("framework.composite.register",
                             Value(Value::Map{{"registered", Value(name)}})),
                    kJsonType);
  }));

  http.Post("/admin/splits", guarded([this, envelope, require_token](const httplib::Request& req,
                                                                     httplib::Response& res) {
    require_token(req);
    SplitMapping mapping = split_from_json(parse_json_body(req.body));
    const std::string name = mapping.coarse.str();
    fw_.gateway().register_split(std::move(mapping));
    res.set_content(
        envelope("framework.split.register", Value(Value::Map{{"registered", Value(name)}})),
        kJsonType);
  }));

  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_error(res, FrameworkError(ErrorKind::NotFound, "no such endpoint"));
    }
  });

  int port = options_.endpoint.port;
  if (port == 0) {
    port = http.bind_to_any_port(options_.endpoint.host);
    if (port < 0) port = 0;
  } else if (!http.bind_to_port(options_.endpoint.host, port)) {
    port = 0;
  }
  if (port == 0) {
    throw_error(ErrorKind::ContractViolation,
                "cannot bind " + options_.endpoint.host + ":" +
                    std::to_string(options_.endpoint.port) + " (endpoint busy or invalid)");
  }
  bound_port_ = port;
  thread_ = std::thread([s] { s->http.listen_after_bind(); });
  http.wait_until_ready();
  server_ = std::move(server);
  return Lifecycle::Running;
}

Lifecycle HttpBinding::stop() {
  std::unique_ptr<Server> server;
  std::thread thread;
  {
    std::lock_guard lock(mu_);
    if (!server_) return Lifecycle::Stopped;
    server = std::move(server_);
    thread = std::move(thread_);
  }
  // Closes the listener; the worker pool finishes requests already accepted
  // before listen_after_bind returns.
  server->http.stop();
  if (thread.joinable()) thread.join();
  return Lifecycle::Stopped;
}

}  // namespace iotmesh
