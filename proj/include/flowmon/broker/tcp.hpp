#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "flowmon/broker/core.hpp"
#include "flowmon/broker/transport.hpp"

namespace flowmon::broker {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Parses `host:port`. Throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

/// Accepts TCP connections and feeds their lines into a BrokerCore. One
/// reader thread per connection plus a ticker calling `on_tick` every
/// `tick_ms` (retransmissions, revocations).
class TcpBrokerServer {
 public:
  TcpBrokerServer(BrokerCore& core, std::function<void()> on_tick, std::int64_t tick_ms = 100);
  ~TcpBrokerServer();

  TcpBrokerServer(const TcpBrokerServer&) = delete;
  TcpBrokerServer& operator=(const TcpBrokerServer&) = delete;

  /// Binds and starts serving. Throws ConfigError if the address is in use.
  void start(const Endpoint& endpoint);
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  class Connection;
  void accept_loop();

  BrokerCore& core_;
  std::function<void()> on_tick_;
  std::int64_t tick_ms_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::thread ticker_;
  std::mutex conn_mu_;
  std::vector<std::shared_ptr<Connection>> connections_;
};

/// Client transport over TCP. Each open() starts a reader thread that
/// delivers lines to the handlers; close() only shuts the socket down, so it
/// is safe to call from inside a handler or while holding a lock the reader
/// is waiting for. Readers are joined on destruction.
class TcpClientTransport final : public ClientTransport {
 public:
  explicit TcpClientTransport(Endpoint endpoint);
  ~TcpClientTransport() override;

  bool open() override;
  void send(const std::string& line) override;
  void close() override;
  bool is_open() const override;
  void set_handlers(LineHandler on_line, CloseHandler on_close) override;

 private:
  struct Channel;

  Endpoint endpoint_;
  mutable std::mutex io_mu_;
  std::mutex handler_mu_;
  std::shared_ptr<Channel> channel_;
  std::vector<std::thread> readers_;
};

}  // namespace flowmon::broker
