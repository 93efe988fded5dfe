#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "flowmon/flow/crossing.hpp"
#include "flowmon/flow/flow_event.hpp"

namespace flowmon::flow {

inline constexpr std::size_t kOutboundQueueCapacity = 10'000;

/// Sequences crossings into FlowEvents and buffers them for the single
/// consumer. On overflow the oldest queued event is dropped and counted.
class EventEmitter {
 public:
  explicit EventEmitter(std::string sensor_id, std::uint64_t first_seq = 1,
                        std::size_t capacity = kOutboundQueueCapacity);

  /// Returns the events just enqueued.
  std::vector<FlowEvent> emit(const std::vector<Crossing>& crossings);

  std::vector<FlowEvent> drain();

  std::size_t queued() const { return queue_.size(); }
  std::uint64_t dropped() const { return dropped_; }
  const std::string& sensor_id() const { return sensor_id_; }

 private:
  std::string sensor_id_;
  std::uint64_t next_seq_;
  std::size_t capacity_;
  std::deque<FlowEvent> queue_;
  std::uint64_t dropped_ = 0;
};

}  // namespace flowmon::flow
