#include "flowmon/flow/emitter.hpp"

#include "flowmon/common/errors.hpp"

namespace flowmon::flow {

EventEmitter::EventEmitter(std::string sensor_id, std::uint64_t first_seq, std::size_t capacity)
    : sensor_id_(std::move(sensor_id)), next_seq_(first_seq), capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("emitter capacity must be positive");
}

std::vector<FlowEvent> EventEmitter::emit(const std::vector<Crossing>& crossings) {
  std::vector<FlowEvent> out;
  out.reserve(crossings.size());
  for (const Crossing& c : crossings) {
    FlowEvent event{sensor_id_, next_seq_++, c.direction, c.timestamp_ms};
    if (queue_.size() == capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(event);
    out.push_back(std::move(event));
  }
  return out;
}

std::vector<FlowEvent> EventEmitter::drain() {
  std::vector<FlowEvent> out(queue_.begin(), queue_.end());
  queue_.clear();
  return out;
}

}  // namespace flowmon::flow
