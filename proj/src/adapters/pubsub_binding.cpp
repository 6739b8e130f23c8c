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

#include "iotmesh/adapters/pubsub_binding.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>

namespace iotmesh {

namespace {

Json err_frame(std::string reason, const Json* ref, int code = 422) {
  Json f{{"op", "err"}, {"reason", std::move(reason)}, {"code", code}};
  if (ref) f["ref"] = *ref;
  return f;
}

}  // namespace

struct PubSubSession::State {
  explicit State(Options o) : options(o) {}
  const Options options;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> out;
  bool closed = false;
};

PubSubSession::PubSubSession(EventBus& bus, const Clock& clock, std::string session_id,
                             Options options)
    : bus_(bus),
      clock_(clock),
      id_(std::move(session_id)),
      state_(std::make_shared<State>(options)) {}

PubSubSession::PubSubSession(EventBus& bus, const Clock& clock, std::string session_id)
    : PubSubSession(bus, clock, std::move(session_id), Options{}) {}

PubSubSession::~PubSubSession() { close(); }

void PubSubSession::handle_line(std::string_view line) {
  Json reply;
  if (line.size() > state_->options.max_line_bytes) {
    reply = err_frame("frame exceeds " + std::to_string(state_->options.max_line_bytes) + " bytes",
                      nullptr);
  } else {
    Json frame;
    try {
      frame = Json::parse(line);
    } catch (const Json::parse_error&) {
      frame = Json();
      reply = err_frame("malformed frame: not JSON", nullptr);
    }
    if (reply.is_null()) {
      if (!frame.is_object()) {
        reply = err_frame("malformed frame: not an object", nullptr);
      } else {
        const Json* ref = frame.contains("ref") ? &frame["ref"] : nullptr;
        try {
          reply = handle(frame);
        } catch (const FrameworkError& e) {
          reply = err_frame(e.detail(), ref, e.kind() == ErrorKind::NotFound ? 404 : 422);
        } catch (const Json::exception&) {
          reply = err_frame("malformed frame: wrong field type", ref);
        }
        if (ref) reply["ref"] = *ref;
      }
    }
  }
  std::lock_guard lock(state_->mu);
  state_->out.push_back(reply.dump());
  state_->cv.notify_all();
}

Json PubSubSession::handle(const Json& frame) {
  const std::string op = json_field::string(frame, "op");
  if (op == "pub") {
    json_field::reject_unknown(frame, {"op", "topic", "payload", "capability", "id", "headers", "ref"},
                               "pub frame");
    const std::string topic = json_field::string(frame, "topic");
    {
      std::lock_guard lock(state_->mu);
      if (state_->out.size() >= state_->options.max_queue) {
        return err_frame("backpressure: outbound queue full", nullptr, 503);
      }
    }
    Message msg{
        .message_id = frame.contains("id") ? json_field::string(frame, "id")
                                           : id_ + "-" + std::to_string(published_ + 1),
        .correlation_id = std::nullopt,
        .capability = Capability::parse(json_field::string_or(frame, "capability", topic)),
        .timestamp_ms = clock_.now(),
        .headers = {},
        .body = value_from_json(json_field::require(frame, "payload")),
    };
    if (frame.contains("headers")) {
      msg.headers = frame["headers"].get<std::map<std::string, std::string>>();
    }
    check_message(msg);
    const std::string delivery = bus_.publish(topic, std::move(msg));
    ++published_;
    return Json{{"op", "ok"}, {"delivery_id", delivery}};
  }
  if (op == "sub") {
    json_field::reject_unknown(frame, {"op", "pattern", "ack", "ref"}, "sub frame");
    const std::string pattern = json_field::string(frame, "pattern");
    const std::string ack = json_field::string_or(frame, "ack", "manual");
    if (ack != "manual" && ack != "auto") {
      throw_error(ErrorKind::ContractViolation, "ack must be manual or auto");
    }
    std::weak_ptr<State> weak = state_;
    Subscription sub = bus_.subscribe(
        pattern,
        [weak](const BusEvent& e) {
          auto state = weak.lock();
          if (!state) throw FrameworkError(ErrorKind::CrashFailure, "session gone");
          Json evt{{"op", "evt"},
                   {"subscription", e.subscription},
                   {"delivery_id", e.delivery_id},
                   {"topic", e.topic},
                   {"attempt", e.attempt},
                   {"id", e.payload.message_id},
                   {"capability", e.payload.capability.str()},
                   {"headers", e.payload.headers},
                   {"payload", value_to_json(e.payload.body)}};
          std::lock_guard lock(state->mu);
          if (state->closed || state->out.size() >= state->options.max_queue) {
            // Refusing the delivery leaves it unacknowledged, so the bus
            // redelivers it once the reader has caught up.
            throw FrameworkError(ErrorKind::TransientFault, "outbound queue full");
          }
          state->out.push_back(evt.dump());
          state->cv.notify_all();
        },
        ack == "auto" ? AckMode::Auto : AckMode::Manual);
    const SubscriptionId id = sub.id();
    std::lock_guard lock(subs_mu_);
    subs_.emplace(id, std::move(sub));
    return Json{{"op", "ok"}, {"subscription", id}};
  }
  if (op == "ack") {
    json_field::reject_unknown(frame, {"op", "subscription", "delivery_id", "ref"}, "ack frame");
    const auto sub = static_cast<SubscriptionId>(json_field::integer(frame, "subscription"));
    const std::string delivery = json_field::string(frame, "delivery_id");
    {
      std::lock_guard lock(subs_mu_);
      if (!subs_.count(sub)) {
        throw_error(ErrorKind::NotFound, "no subscription " + std::to_string(sub) + " here");
      }
    }
    bus_.ack(sub, delivery);
    return Json{{"op", "ok"}};
  }
  throw_error(ErrorKind::ContractViolation, "unknown op '" + op + "'");
}

std::vector<std::string> PubSubSession::take_output() {
  std::lock_guard lock(state_->mu);
  std::vector<std::string> out(state_->out.begin(), state_->out.end());
  state_->out.clear();
  return out;
}

bool PubSubSession::wait_output(std::vector<std::string>& out) {
  std::unique_lock lock(state_->mu);
  state_->cv.wait(lock, [&] { return state_->closed || !state_->out.empty(); });
  out.assign(state_->out.begin(), state_->out.end());
  state_->out.clear();
  return !out.empty();
}

void PubSubSession::close() {
  std::map<SubscriptionId, Subscription> subs;
  {
    std::lock_guard lock(subs_mu_);
    subs.swap(subs_);
  }
  subs.clear();
  std::lock_guard lock(state_->mu);
  state_->closed = true;
  state_->cv.notify_all();
}

std::size_t PubSubSession::subscriptions() const {
  std::lock_guard lock(subs_mu_);
  return subs_.size();
}

struct PubSubBinding::Connection {
  Connection(int f, EventBus& bus, const Clock& clock, std::string id,
             PubSubSession::Options o)
      : fd(f), max_line(o.max_line_bytes), session(bus, clock, std::move(id), o) {}
  int fd;
  std::size_t max_line;
  PubSubSession session;
  std::thread reader;
  std::thread writer;
  std::atomic<int> finished{0};
};

PubSubBinding::PubSubBinding(EventBus& bus, const Clock& clock, Options options)
    : bus_(bus), clock_(clock), options_(std::move(options)) {}

PubSubBinding::~PubSubBinding() { stop(); }

Lifecycle PubSubBinding::state() const {
  std::lock_guard lock(mu_);
  return running_ ? Lifecycle::Running : Lifecycle::Stopped;
}

Endpoint PubSubBinding::endpoint() const {
  std::lock_guard lock(mu_);
  Endpoint e = options_.endpoint;
  if (running_) e.port = bound_port_;
  return e;
}

std::size_t PubSubBinding::connections() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& c : conns_) n += c->finished.load() < 2;
  return n;
}

Lifecycle PubSubBinding::start() {
  std::lock_guard lock(mu_);
  if (running_) return Lifecycle::Running;
  const Endpoint& ep = options_.endpoint;
  auto busy = [&](const std::string& why) {
    throw_error(ErrorKind::ContractViolation,
                "cannot bind " + ep.host + ":" + std::to_string(ep.port) + ": " + why);
  };
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    busy("cannot resolve host");
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    busy(std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 64) != 0) {
    const std::string why = std::strerror(errno);
    freeaddrinfo(res);
    ::close(fd);
    busy(why);
  }
  freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  if (::pipe2(wake_pipe_, O_CLOEXEC) != 0) {
    ::close(fd);
    busy(std::strerror(errno));
  }
  listen_fd_ = fd;
  bound_port_ = ntohs(bound.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  return Lifecycle::Running;
}

void PubSubBinding::accept_loop() {
  for (;;) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[1].revents) return;
    if (!(fds[0].revents & POLLIN)) continue;
    const int cfd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (cfd < 0) continue;
    std::lock_guard lock(mu_);
    // Reap connections whose peers went away.
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->finished.load() == 2) {
        (*it)->reader.join();
        (*it)->writer.join();
        ::close((*it)->fd);
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
    auto conn = std::make_shared<Connection>(cfd, bus_, clock_,
                                             "ps" + std::to_string(++next_conn_),
                                             options_.session);
    conns_.push_back(conn);
    serve(conn);
  }
}

void PubSubBinding::serve(const std::shared_ptr<Connection>& conn) {
  Connection* c = conn.get();
  c->writer = std::thread([c] {
    std::vector<std::string> frames;
    bool healthy = true;
    while (c->session.wait_output(frames)) {
      if (!healthy) continue;
      std::string buf;
      for (const auto& f : frames) {
        buf += f;
        buf += '\n';
      }
      std::size_t sent = 0;
      while (sent < buf.size()) {
        const ssize_t n = ::send(c->fd, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
          healthy = false;
          ::shutdown(c->fd, SHUT_RD);
          break;
        }
        sent += static_cast<std::size_t>(n);
      }
    }
    ::shutdown(c->fd, SHUT_WR);
    ++c->finished;
  });
  c->reader = std::thread([c] {
    const std::size_t max_line = c->max_line;
    std::string buf;
    bool discarding = false;
    char chunk[4096];
    for (;;) {
      const ssize_t n = ::recv(c->fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (std::size_t nl; (nl = buf.find('\n', start)) != std::string::npos; start = nl + 1) {
        std::string_view line(buf.data() + start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (discarding) {
          discarding = false;  // the tail of an over-long line
        } else if (!line.empty()) {
          c->session.handle_line(line);
        }
      }
      buf.erase(0, start);
      if (buf.size() > max_line) {
        if (!discarding) c->session.handle_line(std::string(max_line + 1, ' '));
        discarding = true;
        buf.clear();
      }
    }
    c->session.close();
    ++c->finished;
  });
}

Lifecycle PubSubBinding::stop() {
  std::vector<std::shared_ptr<Connection>> conns;
  std::thread acceptor;
  {
    std::lock_guard lock(mu_);
    if (!running_) return Lifecycle::Stopped;
    running_ = false;
    [[maybe_unused]] auto w = ::write(wake_pipe_[1], "x", 1);
    acceptor = std::move(acceptor_);
  }
  acceptor.join();
  std::lock_guard lock(mu_);
  ::close(listen_fd_);
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
  listen_fd_ = -1;
  conns.swap(conns_);
  // Stop reading; replies already queued are still written out.
  for (auto& c : conns) ::shutdown(c->fd, SHUT_RD);
  for (auto& c : conns) {
    c->reader.join();
    c->writer.join();
    ::close(c->fd);
  }
  return Lifecycle::Stopped;
}

}  // namespace iotmesh
