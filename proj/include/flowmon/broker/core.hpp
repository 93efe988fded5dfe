#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flowmon/broker/whitelist.hpp"
#include "flowmon/broker/wire.hpp"
#include "flowmon/common/clock.hpp"

namespace flowmon::broker {

inline constexpr std::size_t kMaxInflight = 1000;
inline constexpr std::int64_t kRetransmitMs = 5000;
inline constexpr int kMaxDeliveryAttempts = 5;

/// Outbound half of a client connection, owned by the transport.
class SessionSink {
 public:
  virtual ~SessionSink() = default;
  virtual void send_line(const std::string& line) = 0;
  virtual void close() = 0;
};

struct Message {
  std::string topic;
  std::string payload;
  int qos = 0;
  bool operator==(const Message&) const = default;
};

/// Publication produced by an interceptor, routed after it returns.
struct Outgoing {
  Message message;
  bool retain = false;
};

/// Who published an intercepted message.
struct Origin {
  std::string device_id;
  std::uint32_t mid = 0;
};

using Interceptor = std::function<std::vector<Outgoing>(const Message&, const Origin&)>;

struct BrokerDiagnostics {
  std::uint64_t frames_in = 0;
  std::uint64_t protocol_errors = 0;
  std::uint64_t auth_rejections = 0;
  std::uint64_t routed = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t deliveries_abandoned = 0;
  std::uint64_t interceptor_failures = 0;
  std::uint64_t inflight_overflows = 0;
  std::uint64_t forbidden = 0;
};

using SessionId = std::uint64_t;

/// Transport-independent broker state machine: sessions, authentication,
/// subscriptions, QoS-1 delivery, retained config/key messages and the
/// server-side interception layer. All entry points are serialized by one
/// mutex; interceptors run under it and must not call back into the core.
///
/// Access rules beyond the whitelist: `devices/{id}/...` messages are only
/// delivered to sessions of device `id`; clients may publish
/// `devices/{own id}/hello` but never config or key topics.
class BrokerCore {
 public:
  BrokerCore(Whitelist& whitelist, const Clock& clock);

  SessionId open(std::shared_ptr<SessionSink> sink);
  void on_line(SessionId id, std::string_view line);
  void on_disconnect(SessionId id);

  /// Retransmits overdue QoS-1 deliveries, finishes rotations whose grace
  /// period ended and drops sessions bound to revoked keys.
  void tick();

  /// Server-originated publication (not intercepted).
  void publish(const Message& message, bool retain = false);

  void add_interceptor(std::string filter, Interceptor handler);

  /// Revokes `key` and closes every session authenticated with it.
  void revoke_key(const std::string& key);

  std::optional<Message> retained(const std::string& topic) const;
  BrokerDiagnostics diagnostics() const;
  std::size_t session_count() const;
  std::size_t authenticated_count() const;

  static bool retainable(std::string_view topic);

 private:
  struct Pending {
    Message message;
    int attempts = 0;
    std::int64_t last_sent_ms = 0;
  };
  struct Session {
    std::shared_ptr<SessionSink> sink;
    bool authenticated = false;
    std::string client_id;
    std::string device_id;
    std::string key;
    std::set<std::string> filters;
    std::map<std::uint32_t, Pending> inflight;
    std::uint32_t next_mid = 1;
    bool closed = false;
  };

  void send(Session& s, const Frame& frame);
  void close_session(SessionId id, Session& s, const std::string& reason);
  void handle(SessionId id, Session& s, const Frame& frame);
  void handle_connect(SessionId id, Session& s, const Frame& frame);
  void handle_publish(SessionId id, Session& s, const Frame& frame);
  void route_locked(const Message& message, bool retain);
  void deliver(SessionId id, Session& s, const Message& message);
  bool may_receive(const Session& s, const std::string& topic) const;
  bool may_publish(const Session& s, const std::string& topic) const;
  void drop_revoked_locked(const std::vector<std::string>& keys);
  void reap_closed();

  Whitelist& whitelist_;
  const Clock& clock_;
  mutable std::mutex mu_;
  std::map<SessionId, Session> sessions_;
  SessionId next_session_ = 1;
  std::vector<std::pair<std::string, Interceptor>> interceptors_;
  std::map<std::string, Message> retained_;
  BrokerDiagnostics diag_;
};

}  // namespace flowmon::broker
