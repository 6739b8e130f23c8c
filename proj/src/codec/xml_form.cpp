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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "iotmesh/codec/codec.hpp"
#include "iotmesh/core/error.hpp"
#include "iotmesh/core/utf8.hpp"

namespace iotmesh::codec::detail {

namespace {

[[noreturn]] void bad(std::string detail) {
  throw FrameworkError(ErrorKind::ContractViolation, "XmlForm: " + std::move(detail));
}

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F'); }
int hex_value(char c) {
  if (is_digit(c)) return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return c - 'A' + 10;
}
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_name_start(char c) { return is_alpha(c) || c == '_'; }
bool is_name_char(char c) { return is_name_start(c) || is_digit(c) || c == '-' || c == '.'; }

// Shared by text and attribute values. Control characters, including tab
// and newline, are written as character references so they survive
// attribute-value normalization in other XML readers.
void escape_text(std::string& out, std::string_view s, bool attribute) {
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out += ch;
        }
        break;
      default:
        if (c < 0x20 || c == 0x7F) {
          char buf[10];
          std::snprintf(buf, sizeof buf, "&#x%X;", c);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
}

std::string_view tag_for(ValueKind kind) {
  switch (kind) {
    case ValueKind::Null: return "null";
    case ValueKind::Bool: return "bool";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Str: return "str";
    case ValueKind::List: return "list";
    case ValueKind::Map: return "map";
  }
  return "null";
}

void write_value(std::string& out, std::string_view name, const Value& v) {
  out += '<';
  out += name;
  out += " t=\"";
  out += tag_for(v.kind());
  out += "\">";
  switch (v.kind()) {
    case ValueKind::Null: break;
    case ValueKind::Bool: out += v.as_bool() ? "true" : "false"; break;
    case ValueKind::Int: out += std::to_string(v.as_int()); break;
    case ValueKind::Float: out += format_float(v.as_float()); break;
    case ValueKind::Str: escape_text(out, v.as_str(), false); break;
    case ValueKind::List:
      for (const auto& item : v.as_list()) write_value(out, "item", item);
      break;
    case ValueKind::Map:
      for (const auto& [key, item] : v.as_map()) write_value(out, escape_xml_name(key), item);
      break;
  }
  out += "</";
  out += name;
  out += '>';
}

struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;
  bool text_has_content = false;
  std::vector<Node> children;

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

class Reader {
 public:
  Reader(std::string_view in, std::size_t max_depth) : in_(in), max_depth_(max_depth) {}

  Node document() {
    skip_space();
    if (starts_with("<?xml")) {
      std::size_t end = in_.find("?>", pos_);
      if (end == std::string_view::npos) bad("unterminated XML declaration");
      pos_ = end + 2;
      skip_space();
    }
    if (!starts_with("<")) bad("expected root element");
    Node root = element(1);
    skip_space();
    if (pos_ != in_.size()) bad("trailing content after root element");
    return root;
  }

 private:
  bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }
  bool eof() const { return pos_ >= in_.size(); }
  char peek() const { return in_[pos_]; }
  void expect(char c) {
    if (eof() || in_[pos_] != c) bad(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_space() {
    while (!eof() && is_space(in_[pos_])) ++pos_;
  }

  std::string name() {
    if (eof() || !is_name_start(peek())) bad("invalid element or attribute name");
    std::size_t start = pos_;
    while (!eof() && is_name_char(peek())) ++pos_;
    return std::string(in_.substr(start, pos_ - start));
  }

  void reference(std::string& out) {
    std::size_t end = in_.find(';', pos_);
    if (end == std::string_view::npos || end - pos_ > 12) bad("unterminated entity reference");
    std::string_view ref = in_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    if (ref == "amp") {
      out += '&';
    } else if (ref == "lt") {
      out += '<';
    } else if (ref == "gt") {
      out += '>';
    } else if (ref == "quot") {
      out += '"';
    } else if (ref == "apos") {
      out += '\'';
    } else if (ref.size() >= 2 && ref[0] == '#') {
      std::uint32_t cp = 0;
      std::from_chars_result r;
      if (ref[1] == 'x') {
        if (ref.size() < 3) bad("empty character reference");
        for (char c : ref.substr(2)) {
          if (!is_hex(c)) bad("invalid character reference");
        }
        r = std::from_chars(ref.data() + 2, ref.data() + ref.size(), cp, 16);
      } else {
        for (char c : ref.substr(1)) {
          if (!is_digit(c)) bad("invalid character reference");
        }
        r = std::from_chars(ref.data() + 1, ref.data() + ref.size(), cp, 10);
      }
      if (r.ec != std::errc() || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        bad("invalid character reference");
      }
      append_utf8(out, static_cast<char32_t>(cp));
    } else {
      bad("unknown entity '" + std::string(ref) + "'");
    }
  }

  std::string attribute_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) bad("attribute value must be quoted");
    char quote = in_[pos_++];
    std::string out;
    while (true) {
      if (eof()) bad("unterminated attribute value");
      char c = in_[pos_];
      if (c == quote) {
        ++pos_;
        return out;
      }
      if (c == '<') bad("'<' in attribute value");
      if (c == '&') {
        reference(out);
        continue;
      }
      if (static_cast<unsigned char>(c) < 0x20 && !is_space(c)) bad("control character in attribute");
      out += c;
      ++pos_;
    }
  }

  Node element(std::size_t depth) {
    if (depth > max_depth_ + 3) bad("elements nested too deeply");
    expect('<');
    Node node;
    node.name = name();
    while (true) {
      std::size_t before = pos_;
      skip_space();
      if (eof()) bad("unterminated start tag");
      if (starts_with("/>")) {
        pos_ += 2;
        return node;
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      if (pos_ == before) bad("attributes must be separated by whitespace");
      std::string key = name();
      skip_space();
      expect('=');
      skip_space();
      if (node.attr(key) != nullptr) bad("duplicate attribute '" + key + "'");
      node.attrs.emplace_back(std::move(key), attribute_value());
    }
    while (true) {
      if (eof()) bad("unterminated element <" + node.name + ">");
      char c = peek();
      if (c == '<') {
        if (starts_with("</")) {
          pos_ += 2;
          std::string closing = name();
          skip_space();
          expect('>');
          if (closing != node.name) bad("mismatched end tag </" + closing + ">");
          return node;
        }
        if (starts_with("<!") || starts_with("<?")) {
          bad("comments, CDATA, DTDs and processing instructions are not supported");
        }
        node.children.push_back(element(depth + 1));
        continue;
      }
      if (c == '&') {
        reference(node.text);
        node.text_has_content = true;
        continue;
      }
      auto uc = static_cast<unsigned char>(c);
      if (uc < 0x20 && !is_space(c)) bad("control character in text");
      if (!is_space(c)) node.text_has_content = true;
      node.text += c;
      ++pos_;
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
  std::size_t max_depth_;
};

void only_attrs(const Node& node, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, _] : node.attrs) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) bad("unexpected attribute '" + k + "' on <" + node.name + ">");
  }
}

void require_utf8(const std::string& s) {
  if (!is_valid_utf8(s)) bad("text is not valid UTF-8");
}

Value to_value(const Node& node) {
  only_attrs(node, {"t"});
  const std::string* type = node.attr("t");
  if (type == nullptr) bad("element <" + node.name + "> has no t attribute");
  const std::string& t = *type;
  if (t == "list" || t == "map") {
    if (node.text_has_content) bad("container <" + node.name + "> has text content");
    if (t == "list") {
      Value::List list;
      list.reserve(node.children.size());
      for (const auto& child : node.children) {
        if (child.name != "item") bad("list children must be <item>");
        list.push_back(to_value(child));
      }
      return Value(std::move(list));
    }
    Value::Map map;
    for (const auto& child : node.children) {
      std::string key = unescape_xml_name(child.name);
      require_utf8(key);
      if (!map.emplace(std::move(key), to_value(child)).second) {
        bad("duplicate map key <" + child.name + ">");
      }
    }
    return Value(std::move(map));
  }
  if (!node.children.empty()) bad("scalar <" + node.name + "> has child elements");
  const std::string& text = node.text;
  if (t == "null") {
    if (!text.empty()) bad("null element has content");
    return Value();
  }
  if (t == "bool") {
    if (text == "true") return Value(true);
    if (text == "false") return Value(false);
    bad("invalid bool '" + text + "'");
  }
  if (t == "int") {
    std::int64_t i = 0;
    auto r = std::from_chars(text.data(), text.data() + text.size(), i);
    if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size()) {
      bad("invalid int '" + text + "'");
    }
    return Value(i);
  }
  if (t == "float") {
    double d = 0;
    auto r = std::from_chars(text.data(), text.data() + text.size(), d);
    if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size() ||
        !std::isfinite(d)) {
      bad("invalid float '" + text + "'");
    }
    return Value(d);
  }
  if (t == "str") {
    require_utf8(text);
    return Value(text);
  }
  bad("unknown type tag '" + t + "'");
}

}  // namespace

std::string escape_xml_name(std::string_view key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    char c = key[i];
    bool looks_escaped = c == '_' && i + 3 < key.size() && key[i + 1] == 'x' &&
                         is_hex(key[i + 2]) && is_hex(key[i + 3]);
    bool safe = i == 0 ? is_name_start(c) : is_name_char(c);
    if (safe && !looks_escaped) {
      out += c;
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "_x%02X", static_cast<unsigned char>(c));
      out += buf;
    }
  }
  return out;
}

std::string unescape_xml_name(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == '_' && i + 3 < name.size() && name[i + 1] == 'x' && is_hex(name[i + 2]) &&
        is_hex(name[i + 3])) {
      out += static_cast<char>(hex_value(name[i + 2]) * 16 + hex_value(name[i + 3]));
      i += 3;
    } else {
      out += name[i];
    }
  }
  return out;
}

std::string write_xml(const Message& m) {
  std::string out;
  out += "<msg id=\"";
  escape_text(out, m.message_id, true);
  out += '"';
  if (m.correlation_id) {
    out += " corr=\"";
    escape_text(out, *m.correlation_id, true);
    out += '"';
  }
  out += " cap=\"";
  out += m.capability.str();
  out += "\" ts=\"";
  out += std::to_string(m.timestamp_ms);
  out += "\"><headers>";
  for (const auto& [k, v] : m.headers) {
    out += "<header name=\"";
    escape_text(out, k, true);
    out += "\">";
    escape_text(out, v, false);
    out += "</header>";
  }
  out += "</headers>";
  write_value(out, "body", m.body);
  out += "</msg>";
  return out;
}

Message read_xml(std::string_view bytes, std::size_t max_depth) {
  Node root = Reader(bytes, max_depth).document();
  if (root.name != "msg") bad("root element must be <msg>");
  only_attrs(root, {"id", "corr", "cap", "ts"});
  if (root.text_has_content) bad("<msg> has text content");
  const std::string* id = root.attr("id");
  const std::string* cap = root.attr("cap");
  const std::string* ts = root.attr("ts");
  if (id == nullptr || cap == nullptr || ts == nullptr) bad("<msg> requires id, cap and ts");
  require_utf8(*id);
  std::int64_t timestamp = 0;
  auto r = std::from_chars(ts->data(), ts->data() + ts->size(), timestamp);
  if (ts->empty() || r.ec != std::errc() || r.ptr != ts->data() + ts->size()) {
    bad("ts must be an integer");
  }

  const Node* headers = nullptr;
  const Node* body = nullptr;
  for (const auto& child : root.children) {
    if (child.name == "headers" && headers == nullptr && body == nullptr) {
      headers = &child;
    } else if (child.name == "body" && body == nullptr) {
      body = &child;
    } else {
      bad("unexpected <" + child.name + "> in <msg>");
    }
  }
  if (body == nullptr) bad("missing <body>");

  Message m{.message_id = *id,
            .capability = Capability::parse(*cap),
            .timestamp_ms = timestamp,
            .body = to_value(*body)};
  if (const std::string* corr = root.attr("corr")) {
    require_utf8(*corr);
    m.correlation_id = *corr;
  }
  if (headers != nullptr) {
    if (!headers->attrs.empty() || headers->text_has_content) bad("malformed <headers>");
    for (const auto& h : headers->children) {
      if (h.name != "header" || !h.children.empty()) bad("<headers> may only hold <header>");
      only_attrs(h, {"name"});
      const std::string* name = h.attr("name");
      if (name == nullptr) bad("<header> without name");
      require_utf8(*name);
      require_utf8(h.text);
      if (!m.headers.emplace(*name, h.text).second) bad("duplicate header '" + *name + "'");
    }
  }
  return m;
}

}  // namespace iotmesh::codec::detail
