#include "flowmon/broker/client.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "flowmon/common/errors.hpp"

namespace flowmon::broker {

BrokerClient::BrokerClient(std::shared_ptr<ClientTransport> transport, const Clock& clock, ClientOptions options)
    : transport_(std::move(transport)), clock_(clock), options_(std::move(options)) {
  transport_->set_handlers([this](const std::string& line) { handle_line(line); },
                           [this] { handle_closed(); });
}

BrokerClient::~BrokerClient() {
  transport_->set_handlers(nullptr, nullptr);
  transport_->close();
}

void BrokerClient::set_state(State s) {
  if (state_ == s) return;
  state_ = s;
  if (on_state_) on_state_(s);
}

void BrokerClient::send(const Frame& frame) { transport_->send(encode(frame)); }

void BrokerClient::start_attempt() {
  attempt_started_ms_ = clock_.now_ms();
  if (!transport_->is_open() && !transport_->open()) {
    backoff_ms_ = backoff_ms_ == 0 ? options_.min_backoff_ms : std::min(backoff_ms_ * 2, options_.max_backoff_ms);
    backoff_until_ms_ = clock_.now_ms() + backoff_ms_;
    set_state(State::Backoff);
    return;
  }
  set_state(State::Connecting);
  send(Frame::connect(options_.key, options_.client_id));
}

void BrokerClient::connect() {
  std::lock_guard lock(mu_);
  if (state_ == State::Connected || state_ == State::Connecting) return;
  reject_reason_.clear();
  backoff_ms_ = 0;
  start_attempt();
}

void BrokerClient::disconnect() {
  std::lock_guard lock(mu_);
  transport_->close();
  acked_filters_.clear();
  for (auto& [mid, p] : pending_) p.sent = false;
  set_state(State::Idle);
}

void BrokerClient::resend_session_state() {
  const std::int64_t now = clock_.now_ms();
  subs_sent_ms_ = now;
  for (const auto& f : filters_) {
    if (!acked_filters_.count(f)) send(Frame::sub(f));
  }
  for (auto& [mid, p] : pending_) {
    send(Frame::pub(p.topic, mid, 1, p.payload));
    p.sent = true;
    p.last_sent_ms = now;
  }
}

void BrokerClient::handle_line(const std::string& line) {
  std::lock_guard lock(mu_);
  Frame frame;
  try {
    frame = decode(line);
  } catch (const ProtocolError& e) {
    spdlog::warn("{}: dropping malformed frame from broker: {}", options_.client_id, e.what());
    return;
  }
  switch (frame.type) {
    case FrameType::Connack:
      if (state_ != State::Connecting) return;
      backoff_ms_ = 0;
      set_state(State::Connected);
      resend_session_state();
      break;
    case FrameType::Reject:
      reject_reason_ = frame.reason;
      spdlog::warn("{}: broker rejected: {}", options_.client_id, frame.reason);
      if (state_ == State::Connecting && frame.reason.rfind("auth", 0) == 0) {
        transport_->close();
        set_state(State::Rejected);
      }
      break;
    case FrameType::Suback:
      acked_filters_.insert(frame.filter);
      break;
    case FrameType::Puback:
      if (pending_.erase(frame.mid) && on_ack_) on_ack_(frame.mid);
      break;
    case FrameType::Pub:
      if (frame.qos == 1) send(Frame::puback(frame.mid));
      if (on_message_) on_message_(frame.topic, frame.payload);
      break;
    case FrameType::Pong:
      break;
    default:
      spdlog::warn("{}: unexpected {} from broker", options_.client_id, to_string(frame.type));
  }
}

void BrokerClient::handle_closed() {
  std::lock_guard lock(mu_);
  acked_filters_.clear();
  for (auto& [mid, p] : pending_) p.sent = false;
  if (state_ == State::Rejected || state_ == State::Idle) return;
  backoff_ms_ = backoff_ms_ == 0 ? options_.min_backoff_ms : std::min(backoff_ms_ * 2, options_.max_backoff_ms);
  backoff_until_ms_ = clock_.now_ms() + backoff_ms_;
  set_state(State::Backoff);
}

void BrokerClient::subscribe(const std::string& filter) {
  std::lock_guard lock(mu_);
  filters_.insert(filter);
  if (state_ == State::Connected && !acked_filters_.count(filter)) {
    send(Frame::sub(filter));
    subs_sent_ms_ = clock_.now_ms();
  }
}

std::uint32_t BrokerClient::publish(const std::string& topic, const std::string& payload, int qos) {
  std::lock_guard lock(mu_);
  if (qos == 0) {
    if (state_ == State::Connected) send(Frame::pub(topic, 0, 0, payload));
    return 0;
  }
  std::uint32_t mid = next_mid_;
  while (mid == 0 || pending_.count(mid)) ++mid;
  next_mid_ = mid + 1;
  Pending& p = pending_[mid];
  p.topic = topic;
  p.payload = payload;
  if (state_ == State::Connected) {
    send(Frame::pub(topic, mid, 1, payload));
    p.sent = true;
    p.last_sent_ms = clock_.now_ms();
  }
  return mid;
}

void BrokerClient::tick() {
  std::lock_guard lock(mu_);
  const std::int64_t now = clock_.now_ms();
  switch (state_) {
    case State::Idle:
    case State::Rejected:
      return;
    case State::Backoff:
      if (now >= backoff_until_ms_) start_attempt();
      return;
    case State::Connecting:
      if (now - attempt_started_ms_ >= options_.connect_timeout_ms) {
        // CONNECT or CONNACK lost: try again on the same connection.
        if (transport_->is_open()) {
          attempt_started_ms_ = now;
          send(Frame::connect(options_.key, options_.client_id));
        } else {
          start_attempt();
        }
      }
      return;
    case State::Connected:
      break;
  }
  if (now - subs_sent_ms_ >= options_.retransmit_ms) {
    bool resent = false;
    for (const auto& f : filters_) {
      if (!acked_filters_.count(f)) {
        send(Frame::sub(f));
        resent = true;
      }
    }
    if (resent) subs_sent_ms_ = now;
  }
  for (auto& [mid, p] : pending_) {
    if (!p.sent || now - p.last_sent_ms >= options_.retransmit_ms) {
      send(Frame::pub(p.topic, mid, 1, p.payload));
      p.sent = true;
      p.last_sent_ms = now;
    }
  }
}

void BrokerClient::set_key(const std::string& key) {
  std::lock_guard lock(mu_);
  options_.key = key;
}

std::string BrokerClient::key() const {
  std::lock_guard lock(mu_);
  return options_.key;
}

BrokerClient::State BrokerClient::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::string BrokerClient::reject_reason() const {
  std::lock_guard lock(mu_);
  return reject_reason_;
}

std::size_t BrokerClient::pending_count() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

bool BrokerClient::subscribed(const std::string& filter) const {
  std::lock_guard lock(mu_);
  return acked_filters_.count(filter) != 0;
}

void BrokerClient::on_message(MessageHandler h) {
  std::lock_guard lock(mu_);
  on_message_ = std::move(h);
}
void BrokerClient::on_ack(AckHandler h) {
  std::lock_guard lock(mu_);
  on_ack_ = std::move(h);
}
void BrokerClient::on_state(StateHandler h) {
  std::lock_guard lock(mu_);
  on_state_ = std::move(h);
}

}  // namespace flowmon::broker
