#include "flowmon/broker/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <spdlog/spdlog.h>

#include "flowmon/common/errors.hpp"

namespace flowmon::broker {

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("endpoint must be host:port, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    const unsigned long port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw ConfigError("bad port in '" + text + "'");
  }
  return ep;
}

namespace {

bool resolve(const Endpoint& ep, sockaddr_in& addr) {
  std::memset(&addr, 0, sizeof addr);
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return true;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) return false;
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return true;
}

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads LF-terminated lines until EOF or error.
template <typename OnLine>
void read_lines(int fd, OnLine on_line) {
  std::string buffer;
  char chunk[4096];
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
      on_line(buffer.substr(start, nl - start));
    }
    buffer.erase(0, start);
    if (buffer.size() > 2 * kMaxPayloadBytes) return;  // no newline in sight
  }
}

}  // namespace

class TcpBrokerServer::Connection final : public SessionSink, public std::enable_shared_from_this<Connection> {
 public:
  explicit Connection(int fd) : fd_(fd) {}
  ~Connection() override {
    if (reader.joinable()) reader.detach();
    ::close(fd_);
  }

  void send_line(const std::string& line) override {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (!send_all(fd_, line + "\n")) closed_ = true;
  }
  void close() override {
    std::lock_guard lock(mu_);
    if (closed_) return;
    closed_ = true;
    ::shutdown(fd_, SHUT_RDWR);
  }
  int fd() const { return fd_; }
  bool finished() const { return finished_; }

  std::thread reader;
  std::atomic<bool> finished_{false};

 private:
  int fd_;
  std::mutex mu_;
  bool closed_ = false;
};

TcpBrokerServer::TcpBrokerServer(BrokerCore& core, std::function<void()> on_tick, std::int64_t tick_ms)
    : core_(core), on_tick_(std::move(on_tick)), tick_ms_(tick_ms) {}

TcpBrokerServer::~TcpBrokerServer() { stop(); }

void TcpBrokerServer::start(const Endpoint& endpoint) {
  sockaddr_in addr{};
  if (!resolve(endpoint, addr)) throw ConfigError("cannot resolve " + endpoint.host);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ConfigError(std::string("socket: ") + std::strerror(errno));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw ConfigError("cannot bind " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + err);
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw ConfigError(std::string("listen: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  ticker_ = std::thread([this] {
    while (running_) {
      std::this_thread::sleep_for(std::chrono::milliseconds(tick_ms_));
      if (running_ && on_tick_) on_tick_();
    }
  });
}

void TcpBrokerServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) return;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto conn = std::make_shared<Connection>(fd);
    const SessionId id = core_.open(conn);
    conn->reader = std::thread([this, conn, id] {
      read_lines(conn->fd(), [&](const std::string& line) { core_.on_line(id, line); });
      core_.on_disconnect(id);
      conn->close();
      conn->finished_ = true;
    });
    std::lock_guard lock(conn_mu_);
    std::erase_if(connections_, [](const auto& c) {
      if (!c->finished()) return false;
      c->reader.join();
      return true;
    });
    connections_.push_back(std::move(conn));
  }
}

void TcpBrokerServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  if (ticker_.joinable()) ticker_.join();
  std::vector<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(conn_mu_);
    conns.swap(connections_);
  }
  for (auto& c : conns) c->close();
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
  }
}

struct TcpClientTransport::Channel {
  explicit Channel(int f) : fd(f) {}
  ~Channel() { ::close(fd); }
  int fd;
  std::atomic<bool> closed_by_owner{false};
  std::atomic<bool> eof{false};
};

TcpClientTransport::TcpClientTransport(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

TcpClientTransport::~TcpClientTransport() {
  close();
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
}

void TcpClientTransport::set_handlers(LineHandler on_line, CloseHandler on_close) {
  std::lock_guard lock(handler_mu_);
  on_line_ = std::move(on_line);
  on_close_ = std::move(on_close);
}

bool TcpClientTransport::open() {
  close();
  sockaddr_in addr{};
  if (!resolve(endpoint_, addr)) return false;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    return false;
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  auto channel = std::make_shared<Channel>(fd);
  {
    std::lock_guard lock(io_mu_);
    channel_ = channel;
  }
  readers_.emplace_back([this, channel] {
    read_lines(channel->fd, [&](const std::string& line) {
      std::lock_guard lock(handler_mu_);
      if (!channel->closed_by_owner && on_line_) on_line_(line);
    });
    channel->eof = true;
    std::lock_guard lock(handler_mu_);
    if (!channel->closed_by_owner.exchange(true) && on_close_) on_close_();
  });
  return true;
}

void TcpClientTransport::send(const std::string& line) {
  std::lock_guard lock(io_mu_);
  if (!channel_ || channel_->closed_by_owner || channel_->eof) return;
  if (!send_all(channel_->fd, line + "\n")) ::shutdown(channel_->fd, SHUT_RDWR);
}

void TcpClientTransport::close() {
  std::lock_guard lock(io_mu_);
  if (!channel_) return;
  channel_->closed_by_owner = true;
  ::shutdown(channel_->fd, SHUT_RDWR);
  channel_.reset();
}

bool TcpClientTransport::is_open() const {
  std::lock_guard lock(io_mu_);
  return channel_ && !channel_->closed_by_owner && !channel_->eof;
}

}  // namespace flowmon::broker
