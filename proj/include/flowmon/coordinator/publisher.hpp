#pragma once

#include <cstdint>

#include "flowmon/broker/client.hpp"
#include "flowmon/coordinator/ledger.hpp"

namespace flowmon::coordinator {

/// Stop-and-wait publication of queued deltas. The queue head is removed
/// only after the broker acknowledges it, so nothing is lost across
/// reconnects and order is preserved.
class DeltaPublisher {
 public:
  DeltaPublisher(broker::BrokerClient& client, DeltaQueue& queue) : client_(client), queue_(queue) {}

  /// Publishes the queue head if nothing is in flight.
  void pump();
  /// Call with every PUBACK mid; returns true if it was ours.
  bool on_ack(std::uint32_t mid);

  bool in_flight() const { return inflight_mid_ != 0; }
  std::uint64_t acknowledged() const { return acknowledged_; }

 private:
  broker::BrokerClient& client_;
  DeltaQueue& queue_;
  std::uint32_t inflight_mid_ = 0;
  std::uint64_t acknowledged_ = 0;
};

}  // namespace flowmon::coordinator
