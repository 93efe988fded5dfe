#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "flowmon/broker/core.hpp"

namespace flowmon::broker {

/// Client side of a line-oriented connection to the broker.
class ClientTransport {
 public:
  using LineHandler = std::function<void(const std::string&)>;
  using CloseHandler = std::function<void()>;

  virtual ~ClientTransport() = default;
  /// (Re)opens the connection. Returns false if the broker is unreachable.
  virtual bool open() = 0;
  virtual void send(const std::string& line) = 0;
  virtual void close() = 0;
  virtual bool is_open() const = 0;

  /// Handlers run on whatever thread delivers input. Replacing them waits
  /// for an in-progress callback to finish.
  virtual void set_handlers(LineHandler on_line, CloseHandler on_close) {
    on_line_ = std::move(on_line);
    on_close_ = std::move(on_close);
  }

 protected:
  LineHandler on_line_;
  CloseHandler on_close_;
};

struct LinkFaults {
  double drop_probability = 0.0;  // per frame, both directions
  std::uint64_t seed = 1;
};

/// In-process connection to a BrokerCore. Frames are queued in both
/// directions and delivered only by pump(), so a whole exchange runs
/// deterministically on the caller's thread. Optional seeded frame loss.
class MemoryLink final : public ClientTransport {
 public:
  MemoryLink(BrokerCore& core, LinkFaults faults = {});
  ~MemoryLink() override;

  bool open() override;
  void send(const std::string& line) override;
  void close() override;
  bool is_open() const override;

  /// Delivers queued frames until both directions are empty. Returns the
  /// number of frames delivered (dropped ones excluded).
  std::size_t pump();

  /// Makes the broker unreachable (open() fails, live session closes).
  void set_reachable(bool reachable);
  /// While stalled, frames queue up but pump() delivers nothing.
  void set_stalled(bool stalled) { stalled_ = stalled; }

  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t frames_to_broker() const { return to_broker_count_; }

 private:
  class Sink;
  bool lose();

  BrokerCore& core_;
  LinkFaults faults_;
  std::mt19937_64 rng_;
  std::shared_ptr<Sink> sink_;
  SessionId session_ = 0;
  bool open_ = false;
  bool reachable_ = true;
  bool stalled_ = false;
  std::deque<std::string> to_broker_;
  std::uint64_t dropped_ = 0;
  std::uint64_t to_broker_count_ = 0;
};

}  // namespace flowmon::broker
