#include "flowmon/broker/transport.hpp"

namespace flowmon::broker {

class MemoryLink::Sink final : public SessionSink {
 public:
  void send_line(const std::string& line) override {
    if (!closed) to_client.push_back(line);
  }
  void close() override { closed = true; }

  std::deque<std::string> to_client;
  bool closed = false;
};

MemoryLink::MemoryLink(BrokerCore& core, LinkFaults faults) : core_(core), faults_(faults), rng_(faults.seed) {}

MemoryLink::~MemoryLink() {
  if (session_ != 0) core_.on_disconnect(session_);
}

bool MemoryLink::open() {
  if (!reachable_) return false;
  if (session_ != 0) core_.on_disconnect(session_);
  sink_ = std::make_shared<Sink>();
  session_ = core_.open(sink_);
  to_broker_.clear();
  open_ = true;
  return true;
}

void MemoryLink::send(const std::string& line) {
  if (!open_) return;
  to_broker_.push_back(line);
}

void MemoryLink::close() {
  if (!open_) return;
  open_ = false;
  to_broker_.clear();
  if (session_ != 0) {
    core_.on_disconnect(session_);
    session_ = 0;
  }
}

bool MemoryLink::is_open() const { return open_; }

void MemoryLink::set_reachable(bool reachable) {
  reachable_ = reachable;
  if (!reachable && open_) {
    close();
    if (on_close_) on_close_();
  }
}

bool MemoryLink::lose() {
  if (faults_.drop_probability <= 0.0) return false;
  std::bernoulli_distribution drop(faults_.drop_probability);
  if (drop(rng_)) {
    ++dropped_;
    return true;
  }
  return false;
}

std::size_t MemoryLink::pump() {
  std::size_t delivered = 0;
  while (open_ && !stalled_) {
    bool progressed = false;
    if (!to_broker_.empty()) {
      std::string line = std::move(to_broker_.front());
      to_broker_.pop_front();
      progressed = true;
      ++to_broker_count_;
      if (!lose()) {
        core_.on_line(session_, line);
        ++delivered;
      }
    }
    if (sink_ && !sink_->to_client.empty()) {
      std::string line = std::move(sink_->to_client.front());
      sink_->to_client.pop_front();
      progressed = true;
      if (!lose()) {
        if (on_line_) on_line_(line);
        ++delivered;
      }
    }
    if (sink_ && sink_->closed && sink_->to_client.empty() && open_) {
      // Broker hung up; everything it sent first has been delivered.
      open_ = false;
      to_broker_.clear();
      session_ = 0;
      if (on_close_) on_close_();
      break;
    }
    if (!progressed) break;
  }
  return delivered;
}

}  // namespace flowmon::broker
