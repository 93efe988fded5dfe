#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "flowmon/broker/transport.hpp"
#include "flowmon/broker/wire.hpp"
#include "flowmon/common/clock.hpp"

namespace flowmon::broker {

struct ClientOptions {
  std::string client_id;
  std::string key;
  std::int64_t connect_timeout_ms = 5'000;
  std::int64_t retransmit_ms = 5'000;
  std::int64_t min_backoff_ms = 1'000;
  std::int64_t max_backoff_ms = 30'000;
};

/// Client-side protocol engine, driven by incoming lines and tick().
/// Subscriptions are remembered and re-sent on every (re)connect until
/// acknowledged; QoS-1 publications stay pending until PUBACK and are
/// retransmitted after `retransmit_ms` and after reconnecting. A REJECT
/// during authentication is terminal. Thread-safe (recursive mutex so
/// handlers may call back into the client).
class BrokerClient {
 public:
  enum class State { Idle, Connecting, Connected, Backoff, Rejected };

  using MessageHandler = std::function<void(const std::string& topic, const std::string& payload)>;
  using AckHandler = std::function<void(std::uint32_t mid)>;
  using StateHandler = std::function<void(State)>;

  BrokerClient(std::shared_ptr<ClientTransport> transport, const Clock& clock, ClientOptions options);
  ~BrokerClient();

  BrokerClient(const BrokerClient&) = delete;
  BrokerClient& operator=(const BrokerClient&) = delete;

  void connect();
  void disconnect();

  void subscribe(const std::string& filter);
  /// Returns the mid (0 for QoS 0). QoS-1 messages published while
  /// disconnected are sent once the session is up.
  std::uint32_t publish(const std::string& topic, const std::string& payload, int qos = 1);

  void tick();

  /// Replaces the key used for future CONNECTs.
  void set_key(const std::string& key);
  std::string key() const;

  State state() const;
  std::string reject_reason() const;
  std::size_t pending_count() const;
  bool subscribed(const std::string& filter) const;

  void on_message(MessageHandler h);
  void on_ack(AckHandler h);
  void on_state(StateHandler h);

 private:
  struct Pending {
    std::string topic;
    std::string payload;
    std::int64_t last_sent_ms = 0;
    bool sent = false;
  };

  void handle_line(const std::string& line);
  void handle_closed();
  void set_state(State s);
  void start_attempt();
  void resend_session_state();
  void send(const Frame& frame);

  std::shared_ptr<ClientTransport> transport_;
  const Clock& clock_;
  ClientOptions options_;
  mutable std::recursive_mutex mu_;
  State state_ = State::Idle;
  std::string reject_reason_;
  std::int64_t attempt_started_ms_ = 0;
  std::int64_t subs_sent_ms_ = 0;
  std::int64_t backoff_until_ms_ = 0;
  std::int64_t backoff_ms_ = 0;
  std::set<std::string> filters_;
  std::set<std::string> acked_filters_;
  std::map<std::uint32_t, Pending> pending_;
  std::uint32_t next_mid_ = 1;
  MessageHandler on_message_;
  AckHandler on_ack_;
  StateHandler on_state_;
};

}  // namespace flowmon::broker
