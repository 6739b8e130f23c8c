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

#include "iotmesh/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace iotmesh {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

class LineError {
 public:
  LineError(std::string_view origin, std::size_t line) : origin_(origin), line_(line) {}
  [[noreturn]] void operator()(const std::string& what) const {
    throw_error(ErrorKind::ContractViolation,
                origin_ + ":" + std::to_string(line_) + ": " + what);
  }

 private:
  std::string origin_;
  std::size_t line_;
};

// Reads a double-quoted string starting at s[0]; returns it and advances s.
std::string read_quoted(std::string_view& s, const LineError& fail) {
  std::string out;
  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') break;
    if (c == '\\') {
      if (++i == s.size()) fail("unterminated string");
      switch (s[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail(std::string("unknown escape \\") + s[i]);
      }
    } else {
      out += c;
    }
  }
  if (i >= s.size()) fail("unterminated string");
  s.remove_prefix(i + 1);
  return out;
}

bool bare_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '-' || c == '.';
}

std::string read_bare(std::string_view& s, const LineError& fail, const char* what) {
  std::size_t n = 0;
  while (n < s.size() && bare_char(s[n])) ++n;
  if (n == 0) fail(std::string("expected ") + what);
  std::string out(s.substr(0, n));
  s.remove_prefix(n);
  return out;
}

struct Parsed {
  std::string value;
  bool quoted = false;
};

int parse_port(const Parsed& v, const LineError& fail) {
  int port = -1;
  auto [end, ec] = std::from_chars(v.value.data(), v.value.data() + v.value.size(), port);
  if (v.quoted || ec != std::errc() || end != v.value.data() + v.value.size() || port < 0 ||
      port > 65535) {
    fail("port must be an integer in [0, 65535], got '" + v.value + "'");
  }
  return port;
}

const std::set<std::string>& log_levels() {
  static const std::set<std::string> levels = {"trace", "debug", "info", "warn", "error", "off"};
  return levels;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys = {"http.host",   "http.port", "pubsub.host",
                                   "pubsub.port", "log.level", "fleet.scenario"};
  for (auto k : setting_keys()) keys.emplace_back(k);
  return keys;
}

CliConfig parse_config(std::string_view text, std::string_view origin) {
  CliConfig config;
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const LineError fail(origin, line_no);
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      line.remove_prefix(1);
      line = trim(line);
      section = read_bare(line, fail, "section name");
      line = trim(line);
      if (line.empty() || line.front() != ']') fail("expected ']'");
      line = trim(line.substr(1));
      if (!line.empty() && line.front() != '#') fail("unexpected text after section header");
      if (section.find('.') != std::string::npos) fail("section names cannot contain '.'");
      continue;
    }

    std::string key = line.front() == '"' ? read_quoted(line, fail)
                                          : read_bare(line, fail, "a key");
    line = trim(line);
    if (line.empty() || line.front() != '=') fail("expected '=' after key '" + key + "'");
    line = trim(line.substr(1));
    if (line.empty()) fail("missing value for '" + key + "'");
    Parsed value;
    if (line.front() == '"') {
      value.value = read_quoted(line, fail);
      value.quoted = true;
    } else {
      value.value = read_bare(line, fail, "a value");
    }
    line = trim(line);
    if (!line.empty() && line.front() != '#') fail("unexpected text after value");

    const std::string full = section.empty() ? key : section + "." + key;
    if (!seen.insert(full).second) fail("duplicate key '" + full + "'");

    if (section == "tokens") {
      if (key.empty() || value.value.empty()) fail("tokens and consumer ids must be non-empty");
      config.framework.tokens[key] = value.value;
    } else if (full == "http.host") {
      config.http.host = value.value;
    } else if (full == "http.port") {
      config.http.port = parse_port(value, fail);
    } else if (full == "pubsub.host") {
      config.pubsub.host = value.value;
    } else if (full == "pubsub.port") {
      config.pubsub.port = parse_port(value, fail);
    } else if (full == "log.level") {
      if (!log_levels().count(value.value)) fail("unknown log level '" + value.value + "'");
      config.log_level = value.value;
    } else if (full == "fleet.scenario") {
      config.fleet_scenario = value.value;
    } else {
      bool known = false;
      for (auto k : setting_keys()) known = known || k == full;
      if (!known) fail("unknown key '" + full + "'");
      try {
        apply_setting(config.framework, full, value.value);
      } catch (const FrameworkError& e) {
        fail(e.detail());
      }
    }
  }
  return config;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorKind::ContractViolation, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  CliConfig config = parse_config(text.str(), path.string());
  config.path = path;
  if (config.fleet_scenario && config.fleet_scenario->is_relative()) {
    config.fleet_scenario = path.parent_path() / *config.fleet_scenario;
  }
  return config;
}

}  // namespace iotmesh
