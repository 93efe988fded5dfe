#include "flowmon/broker/core.hpp"

#include <spdlog/spdlog.h>

#include "flowmon/broker/topic.hpp"
#include "flowmon/common/errors.hpp"

namespace flowmon::broker {

namespace {

// Second level of a `devices/...` topic, if any.
std::string_view device_of(std::string_view topic) {
  const auto levels = split_levels(topic);
  if (levels.size() >= 2 && levels[0] == "devices") return levels[1];
  return {};
}

}  // namespace

BrokerCore::BrokerCore(Whitelist& whitelist, const Clock& clock) : whitelist_(whitelist), clock_(clock) {}

bool BrokerCore::retainable(std::string_view topic) {
  const auto levels = split_levels(topic);
  if (levels.size() < 3 || levels[0] != "devices") return false;
  if (levels.size() == 3 && levels[2] == "key") return true;
  return levels.size() == 4 && levels[2] == "config";
}

SessionId BrokerCore::open(std::shared_ptr<SessionSink> sink) {
  std::lock_guard lock(mu_);
  const SessionId id = next_session_++;
  sessions_[id].sink = std::move(sink);
  return id;
}

void BrokerCore::send(Session& s, const Frame& frame) {
  if (s.closed) return;
  s.sink->send_line(encode(frame));
}

void BrokerCore::close_session(SessionId id, Session& s, const std::string& reason) {
  if (s.closed) return;
  spdlog::info("session {} ({}) closed: {}", id, s.device_id.empty() ? "-" : s.device_id, reason);
  s.closed = true;
  s.sink->close();
}

void BrokerCore::reap_closed() {
  std::erase_if(sessions_, [](const auto& kv) { return kv.second.closed; });
}

void BrokerCore::on_disconnect(SessionId id) {
  std::lock_guard lock(mu_);
  sessions_.erase(id);
}

void BrokerCore::on_line(SessionId id, std::string_view line) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end() || it->second.closed) return;
  Session& s = it->second;
  ++diag_.frames_in;

  Frame frame;
  try {
    frame = decode(line);
  } catch (const ProtocolError& e) {
    ++diag_.protocol_errors;
    send(s, Frame::reject(std::string("protocol: ") + e.what()));
    close_session(id, s, "protocol error");
    reap_closed();
    return;
  }
  handle(id, s, frame);
  reap_closed();
}

void BrokerCore::handle(SessionId id, Session& s, const Frame& frame) {
  if (frame.type == FrameType::Connect) {
    handle_connect(id, s, frame);
    return;
  }
  if (!s.authenticated) {
    ++diag_.protocol_errors;
    send(s, Frame::reject("protocol: first frame must be CONNECT"));
    close_session(id, s, "frame before CONNECT");
    return;
  }
  switch (frame.type) {
    case FrameType::Sub:
      if (!valid_filter(frame.filter)) {
        ++diag_.protocol_errors;
        send(s, Frame::reject("protocol: invalid filter"));
        close_session(id, s, "invalid filter");
        return;
      }
      s.filters.insert(frame.filter);
      send(s, Frame::suback(frame.filter));
      for (const auto& [topic, msg] : retained_) {
        if (topic_matches(frame.filter, topic) && may_receive(s, topic)) deliver(id, s, msg);
      }
      break;
    case FrameType::Pub:
      handle_publish(id, s, frame);
      break;
    case FrameType::Puback:
      s.inflight.erase(frame.mid);
      break;
    case FrameType::Ping:
      send(s, Frame::pong());
      break;
    default:
      ++diag_.protocol_errors;
      send(s, Frame::reject(std::string("protocol: unexpected ") + std::string(to_string(frame.type))));
      close_session(id, s, "unexpected frame");
  }
}

void BrokerCore::handle_connect(SessionId id, Session& s, const Frame& frame) {
  if (s.authenticated) {
    // A retransmitted CONNECT (lost CONNACK) with the same key is answered
    // again; anything else is a protocol violation.
    if (normalize_key(frame.key) == s.key) {
      send(s, Frame::connack());
    } else {
      ++diag_.protocol_errors;
      send(s, Frame::reject("protocol: duplicate CONNECT"));
      close_session(id, s, "duplicate CONNECT");
    }
    return;
  }
  const auto device = whitelist_.authenticate(frame.key);
  if (!device) {
    ++diag_.auth_rejections;
    send(s, Frame::reject(whitelist_.is_revoked(frame.key) ? "auth: key revoked" : "auth: unknown key"));
    close_session(id, s, "authentication failed");
    return;
  }
  s.authenticated = true;
  s.client_id = frame.client_id;
  s.device_id = *device;
  s.key = normalize_key(frame.key);
  send(s, Frame::connack());
  spdlog::info("session {} authenticated as {}", id, s.device_id);
  drop_revoked_locked(whitelist_.confirm_key(s.device_id, s.key));
}

bool BrokerCore::may_receive(const Session& s, const std::string& topic) const {
  const auto dev = device_of(topic);
  return dev.empty() || dev == s.device_id;
}

bool BrokerCore::may_publish(const Session& s, const std::string& topic) const {
  const auto levels = split_levels(topic);
  if (levels.empty() || levels[0] != "devices") return true;
  return levels.size() == 3 && levels[1] == s.device_id && levels[2] == "hello";
}

void BrokerCore::handle_publish(SessionId id, Session& s, const Frame& frame) {
  if (!valid_topic(frame.topic)) {
    ++diag_.protocol_errors;
    send(s, Frame::reject("protocol: invalid topic"));
    close_session(id, s, "invalid topic");
    return;
  }
  if (!may_publish(s, frame.topic)) {
    ++diag_.forbidden;
    send(s, Frame::reject("forbidden: " + frame.topic));
    close_session(id, s, "forbidden publish");
    return;
  }

  const Message message{frame.topic, frame.payload, frame.qos};
  std::vector<Outgoing> produced;
  for (const auto& [filter, handler] : interceptors_) {
    if (!topic_matches(filter, message.topic)) continue;
    try {
      auto out = handler(message, Origin{s.device_id, frame.mid});
      produced.insert(produced.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
    } catch (const std::exception& e) {
      ++diag_.interceptor_failures;
      spdlog::warn("interceptor for {} failed on mid {} from {}: {}", message.topic, frame.mid, s.device_id, e.what());
    }
  }

  route_locked(message, false);
  for (const auto& out : produced) route_locked(out.message, out.retain);
  if (frame.qos == 1) send(s, Frame::puback(frame.mid));
}

void BrokerCore::deliver(SessionId id, Session& s, const Message& message) {
  if (s.closed) return;
  if (message.qos == 0) {
    send(s, Frame::pub(message.topic, 0, 0, message.payload));
    return;
  }
  if (s.inflight.size() >= kMaxInflight) {
    ++diag_.inflight_overflows;
    send(s, Frame::reject("backpressure: inflight limit reached"));
    close_session(id, s, "inflight overflow");
    return;
  }
  std::uint32_t mid = s.next_mid;
  while (mid == 0 || s.inflight.count(mid)) ++mid;
  s.next_mid = mid + 1;
  s.inflight[mid] = {message, 1, clock_.now_ms()};
  send(s, Frame::pub(message.topic, mid, 1, message.payload));
}

void BrokerCore::route_locked(const Message& message, bool retain) {
  if (retain && retainable(message.topic)) retained_[message.topic] = message;
  for (auto& [id, s] : sessions_) {
    if (!s.authenticated || s.closed || !may_receive(s, message.topic)) continue;
    for (const auto& filter : s.filters) {
      if (topic_matches(filter, message.topic)) {
        deliver(id, s, message);
        ++diag_.routed;
        break;
      }
    }
  }
}

void BrokerCore::publish(const Message& message, bool retain) {
  if (!valid_topic(message.topic)) throw InputError("invalid topic '" + message.topic + "'");
  std::lock_guard lock(mu_);
  route_locked(message, retain);
  reap_closed();
}

void BrokerCore::add_interceptor(std::string filter, Interceptor handler) {
  if (!valid_filter(filter)) throw ConfigError("invalid interceptor filter '" + filter + "'");
  std::lock_guard lock(mu_);
  interceptors_.emplace_back(std::move(filter), std::move(handler));
}

void BrokerCore::drop_revoked_locked(const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    for (auto& [id, s] : sessions_) {
      if (s.authenticated && s.key == key) close_session(id, s, "key revoked");
    }
  }
}

void BrokerCore::revoke_key(const std::string& key) {
  whitelist_.revoke(key);
  std::lock_guard lock(mu_);
  drop_revoked_locked({normalize_key(key)});
  reap_closed();
}

void BrokerCore::tick() {
  const std::int64_t now = clock_.now_ms();
  const auto expired = whitelist_.expire(now);
  std::lock_guard lock(mu_);
  drop_revoked_locked(expired);
  for (auto& [id, s] : sessions_) {
    if (s.closed) continue;
    if (s.authenticated && whitelist_.is_revoked(s.key)) {
      close_session(id, s, "key revoked");
      continue;
    }
    for (auto it = s.inflight.begin(); it != s.inflight.end();) {
      Pending& p = it->second;
      if (now - p.last_sent_ms < kRetransmitMs) {
        ++it;
        continue;
      }
      if (p.attempts >= kMaxDeliveryAttempts) {
        ++diag_.deliveries_abandoned;
        spdlog::warn("giving up on mid {} to {} after {} attempts", it->first, s.device_id, p.attempts);
        it = s.inflight.erase(it);
        continue;
      }
      ++p.attempts;
      p.last_sent_ms = now;
      ++diag_.retransmissions;
      send(s, Frame::pub(p.message.topic, it->first, 1, p.message.payload));
      ++it;
    }
  }
  reap_closed();
}

std::optional<Message> BrokerCore::retained(const std::string& topic) const {
  std::lock_guard lock(mu_);
  const auto it = retained_.find(topic);
  if (it == retained_.end()) return std::nullopt;
  return it->second;
}

BrokerDiagnostics BrokerCore::diagnostics() const {
  std::lock_guard lock(mu_);
  return diag_;
}

std::size_t BrokerCore::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::size_t BrokerCore::authenticated_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, s] : sessions_) n += s.authenticated ? 1 : 0;
  return n;
}

}  // namespace flowmon::broker
