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

#include "iotmesh/cli/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <signal.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

#include "iotmesh/adapters/http_binding.hpp"
#include "iotmesh/adapters/pubsub_binding.hpp"
#include "iotmesh/cli/config.hpp"
#include "iotmesh/codec/codec.hpp"
#include "iotmesh/sim/fleet.hpp"
#include "iotmesh/sim/scenario.hpp"

namespace iotmesh {

namespace {

struct Globals {
  std::string url = "http://127.0.0.1:8080";
  std::string token;
  bool json = false;
};

// Raised inside a command to leave with a specific exit code.
struct Exit {
  int code;
};

class Command {
 public:
  Command(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  // Prints a framework-generated JsonForm document.
  void emit(const char* capability, Value body,
            std::optional<std::string> correlation = std::nullopt) {
    out_ << codec::detail::write_json(Message{.message_id = "cli-" + std::to_string(++emitted_),
                                              .correlation_id = std::move(correlation),
                                              .capability = Capability::parse(capability),
                                              .timestamp_ms = 0,
                                              .headers = {},
                                              .body = std::move(body)})
         << '\n';
  }

  [[noreturn]] void fail(int code, const std::string& kind, const std::string& detail,
                         std::optional<std::string> tx = std::nullopt) {
    if (g_.json) {
      Value::Map body{{"error", Value(kind)}, {"detail", Value(detail)}};
      emit("framework.error.report", Value(std::move(body)), std::move(tx));
    } else {
      err_ << "error: " << kind << ": " << detail << '\n';
    }
    throw Exit{code};
  }

  [[noreturn]] void usage(const std::string& detail) { fail(kExitUsage, "usage", detail); }

  httplib::Client client(TimeMs read_timeout_ms = 30000) {
    httplib::Client c(g_.url);
    if (!c.is_valid()) usage("invalid --url '" + g_.url + "'");
    c.set_connection_timeout(std::chrono::seconds(2));
    c.set_read_timeout(std::chrono::milliseconds(read_timeout_ms));
    return c;
  }

  httplib::Headers auth() const {
    httplib::Headers h;
    if (!g_.token.empty()) h.emplace("x-auth-token", g_.token);
    return h;
  }

  // Returns the body of a 200 response; any other outcome exits 1.
  std::string expect_ok(const httplib::Result& res) {
    if (!res) {
      fail(kExitRequestFailed, "unreachable",
           "cannot reach " + g_.url + " (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status == 200) return res->body;
    std::string kind = "HTTP " + std::to_string(res->status);
    std::string detail = res->body;
    std::optional<std::string> tx;
    try {
      Json j = Json::parse(res->body);
      kind = j.at("error").get<std::string>();
      detail = j.at("detail").get<std::string>();
      if (j.contains("transaction_id") && j["transaction_id"].is_string()) {
        tx = j["transaction_id"].get<std::string>();
      }
    } catch (const Json::exception&) {
    }
    fail(kExitRequestFailed, kind, detail, tx);
  }

  std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) usage("cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
  }

  Json read_json_file(const std::string& path) {
    try {
      return Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
      usage(path + " is not valid JSON: " + e.what());
    }
  }

  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
  int emitted_ = 0;
};

// ------------------------------------------------------------------ serve

int cmd_serve(Command& cmd, const std::string& config_path) {
  CliConfig config;
  std::optional<Scenario> fleet_source;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    if (config.fleet_scenario) fleet_source = load_scenario(*config.fleet_scenario);
  } catch (const FrameworkError& e) {
    cmd.fail(kExitUsage, "config", e.detail());
  }

  auto logger = spdlog::stderr_color_mt("iotmesh");
  logger->set_level(spdlog::level::from_str(config.log_level));

  // Interrupts are taken synchronously below; every thread created from
  // here on inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  WallScheduler scheduler;
  Fleet fleet(scheduler);
  auto fw = std::make_unique<Framework>(scheduler, fleet, config.framework);
  fleet.attach(fw->registry(), &fw->bus(), &fw->device_keys());
  BindingSet bindings;
  auto& http = bindings.add(std::make_unique<HttpBinding>(
      *fw, HttpBinding::Options{.binding_id = "http", .endpoint = config.http}));
  auto& pubsub = bindings.add(std::make_unique<PubSubBinding>(
      fw->bus(), scheduler, PubSubBinding::Options{.endpoint = config.pubsub}));

  auto teardown = [&] {
    bindings.stop_all();
    fw->stop();
    scheduler.shutdown();
    spdlog::drop("iotmesh");
  };

  try {
    if (fleet_source) {
      for (const auto& c : fleet_source->composites) fw->registry().register_composite(c);
      for (const auto& d : fleet_source->devices) fleet.spawn_device(d);
      for (const auto& s : fleet_source->splits) fw->gateway().register_split(s.mapping);
      logger->info("fleet: {} devices from {}", fleet.size(), config.fleet_scenario->string());
    }
  } catch (const FrameworkError& e) {
    teardown();
    cmd.fail(kExitUsage, "config", e.detail());
  }
  try {
    bindings.start_all();
  } catch (const FrameworkError& e) {
    logger->error("bind failed: {}", e.detail());
    teardown();
    cmd.fail(kExitBindFailed, "bind", e.detail());
  }
  fw->start();

  const Endpoint h = http.endpoint();
  const Endpoint p = pubsub.endpoint();
  if (cmd.g_.json) {
    auto ep = [](const Endpoint& e) {
      return Value(Value::Map{{"host", Value(e.host)}, {"port", Value(std::int64_t{e.port})}});
    };
    cmd.emit("framework.serve.ready", Value(Value::Map{{"http", ep(h)}, {"pubsub", ep(p)}}));
  } else {
    cmd.out_ << "listening http=" << h.host << ':' << h.port << " pubsub=" << p.host << ':'
             << p.port << '\n';
  }
  cmd.out_.flush();
  logger->info("serving http on {}:{} and pub/sub on {}:{}", h.host, h.port, p.host, p.port);

  int received = 0;
  sigwait(&signals, &received);
  logger->info("signal {}: draining", received);
  teardown();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return kExitOk;
}

// --------------------------------------------------------------- registry

int cmd_registry_ls(Command& cmd) {
  auto c = cmd.client();
  const std::string body = cmd.expect_ok(c.Get("/registry", cmd.auth()));
  if (cmd.g_.json) {
    cmd.out_ << body << '\n';
    return kExitOk;
  }
  Json doc = value_to_json(codec::detail::read_json(body, Message::kMaxDepth).body);
  for (const auto& s : doc["services"]) {
    cmd.out_ << "service    " << s["service_id"].get<std::string>() << "  "
             << s["capability"].get<std::string>() << "  domain=" << s["domain"].get<std::string>()
             << "  class=" << s["class"].get<std::string>()
             << "  format=" << s["format"].get<std::string>()
             << (s["suspended"].get<bool>() ? "  suspended" : "") << '\n';
  }
  for (const auto& c2 : doc["composites"]) {
    cmd.out_ << "composite  " << c2["capability"].get<std::string>() << "  mode="
             << c2["mode"].get<std::string>() << "  members=" << c2["members"].size() << '\n';
  }
  for (const auto& s : doc["splits"]) {
    cmd.out_ << "split      " << s["coarse"].get<std::string>() << "  fines=" << s["fines"].size()
             << '\n';
  }
  return kExitOk;
}

// ------------------------------------------------------------------- call

struct CallArgs {
  std::string capability;
  std::string format = "json";
  TimeMs deadline_ms = 0;
  std::string body;
};

int cmd_call(Command& cmd, const CallArgs& a) {
  auto format = parse_wire_format(a.format);
  if (!format) cmd.usage("--format must be json or xml");
  if (!Capability::is_valid(a.capability)) cmd.usage("malformed capability '" + a.capability + "'");
  Value body = Value(Value::Map{});
  if (!a.body.empty()) {
    try {
      body = value_from_json(Json::parse(a.body));
    } catch (const Json::parse_error& e) {
      cmd.usage(std::string("--body is not valid JSON: ") + e.what());
    } catch (const FrameworkError& e) {
      cmd.usage("--body: " + e.detail());
    }
  }
  Message request{.message_id = "cli-request",
                  .correlation_id = std::nullopt,
                  .capability = Capability::parse(a.capability),
                  .timestamp_ms = 0,
                  .headers = {},
                  .body = std::move(body)};
  EncodedMessage encoded = codec::encode(request, *format);

  const WireFormat accept = cmd.g_.json ? WireFormat::Json : *format;
  httplib::Headers headers = cmd.auth();
  headers.emplace("accept", std::string(codec::content_type(accept)));
  if (a.deadline_ms > 0) headers.emplace("x-deadline-ms", std::to_string(a.deadline_ms));
  auto c = cmd.client(std::max<TimeMs>(a.deadline_ms, kDefaultDeadlineMs) + 10000);
  const std::string out = cmd.expect_ok(c.Post("/svc/" + a.capability, headers, encoded.bytes,
                                               std::string(codec::content_type(*format))));
  cmd.out_ << out << '\n';
  return kExitOk;
}

// ---------------------------------------------------- compose and split

int cmd_register(Command& cmd, const std::string& path, const char* endpoint, const char* what) {
  const Json doc = cmd.read_json_file(path);
  auto c = cmd.client();
  const std::string body = cmd.expect_ok(c.Post(endpoint, cmd.auth(), doc.dump(), "application/json"));
  if (cmd.g_.json) {
    cmd.out_ << body << '\n';
  } else {
    const Message m = codec::detail::read_json(body, Message::kMaxDepth);
    cmd.out_ << "registered " << what << ' ' << m.body.find("registered")->as_str() << '\n';
  }
  return kExitOk;
}

// ------------------------------------------------------------- audit tail

std::string describe_record(const Message& m) {
  const Value& b = m.body;
  std::ostringstream line;
  line << "seq=" << b.find("seq")->as_int() << "  tx=" << m.message_id
       << "  consumer=" << b.find("consumer_id")->as_str() << "  cap=" << m.capability.str()
       << "  route=" << b.find("route")->as_str() << "  outcome=";
  const Value* outcome = b.find("outcome");
  line << (outcome->kind() == ValueKind::Str ? outcome->as_str() : value_to_json(*outcome).dump());
  line << "  total_ms=" << b.find("total_ms")->as_int();
  return line.str();
}

int cmd_audit_tail(Command& cmd, bool once, std::uint64_t after) {
  auto c = cmd.client(60000);
  for (;;) {
    std::string path = "/audit?after=" + std::to_string(after);
    if (!once) path += "&wait_ms=20000";
    const std::string body = cmd.expect_ok(c.Get(path, cmd.auth()));
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const Message m = codec::detail::read_json(line, Message::kMaxDepth);
      after = std::max<std::uint64_t>(after, static_cast<std::uint64_t>(m.body.find("seq")->as_int()));
      cmd.out_ << (cmd.g_.json ? line : describe_record(m)) << '\n';
    }
    cmd.out_.flush();
    if (once) return kExitOk;
  }
}

// ----------------------------------------------------------- scenario run

int cmd_scenario_run(Command& cmd, const std::string& path, std::optional<std::uint64_t> seed) {
  Scenario scenario = [&] {
    try {
      return load_scenario(path, seed);
    } catch (const FrameworkError& e) {
      cmd.usage(path + ": " + e.detail());
    } catch (const Json::exception& e) {
      cmd.usage(path + ": " + e.what());
    }
  }();
  const ScenarioReport report = run_scenario(scenario);
  if (cmd.g_.json) {
    cmd.out_ << codec::detail::write_json(
                    Message{.message_id = "scenario-" + scenario.name,
                            .correlation_id = std::nullopt,
                            .capability = Capability::parse("framework.scenario.report"),
                            .timestamp_ms = report.document.value("ended_ms", TimeMs{0}),
                            .headers = {},
                            .body = value_from_json(report.document)})
             << '\n';
  } else {
    cmd.out_ << report.render();
  }
  if (report.assertions_failed > 0) {
    cmd.err_ << "error: " << report.assertions_failed << " assertion(s) failed\n";
    return kExitRequestFailed;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Globals g;
  CLI::App app{"iotmesh: IoT microservice integration framework", "iotmesh"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--url", g.url, "Base URL of a running instance")->capture_default_str();
  app.add_option("--token", g.token, "Consumer token sent as x-auth-token");
  app.add_flag("--json", g.json, "Print machine-readable JsonForm output");

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the framework with HTTP and pub/sub bindings");
  serve->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);

  auto* registry = app.add_subcommand("registry", "Inspect the service registry");
  registry->require_subcommand(1);
  auto* ls = registry->add_subcommand("ls", "List services, composites and splits");

  CallArgs call_args;
  auto* call = app.add_subcommand("call", "Issue one request through the gateway");
  call->add_option("capability", call_args.capability, "Capability to request")->required();
  call->add_option("--format", call_args.format, "Wire format of request and response")
      ->check(CLI::IsMember({"json", "xml"}))
      ->capture_default_str();
  call->add_option("--deadline", call_args.deadline_ms, "Deadline in milliseconds")
      ->check(CLI::PositiveNumber);
  call->add_option("--body", call_args.body, "Request body as JSON");

  std::string compose_path;
  auto* compose = app.add_subcommand("compose", "Register a composite spec file");
  compose->add_option("spec", compose_path, "Composite spec JSON file")->required();

  std::string split_path;
  auto* split = app.add_subcommand("split", "Register a split mapping file");
  split->add_option("map", split_path, "Split mapping JSON file")->required();

  bool once = false;
  std::uint64_t after = 0;
  auto* audit = app.add_subcommand("audit", "Read the audit log");
  audit->require_subcommand(1);
  auto* tail = audit->add_subcommand("tail", "Stream audit records as they commit");
  tail->add_flag("--once", once, "Print committed records and exit");
  tail->add_option("--after", after, "Start after this sequence number");

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  auto* scenario = app.add_subcommand("scenario", "Run simulation scenarios");
  scenario->require_subcommand(1);
  auto* run = scenario->add_subcommand("run", "Run a scenario file and print its report");
  run->add_option("file", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Command cmd(g, out, err);
  try {
    if (*serve) return cmd_serve(cmd, config_path);
    if (*ls) return cmd_registry_ls(cmd);
    if (*call) return cmd_call(cmd, call_args);
    if (*compose) return cmd_register(cmd, compose_path, "/admin/composites", "composite");
    if (*split) return cmd_register(cmd, split_path, "/admin/splits", "split");
    if (*tail) return cmd_audit_tail(cmd, once, after);
    if (*run) return cmd_scenario_run(cmd, scenario_path, seed);
  } catch (const Exit& e) {
    out.flush();
    return e.code;
  } catch (const FrameworkError& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.detail() << '\n';
    return kExitRequestFailed;
  }
  return kExitUsage;
}

}  // namespace iotmesh
