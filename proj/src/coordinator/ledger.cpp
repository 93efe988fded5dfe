#include "flowmon/coordinator/ledger.hpp"

#include <spdlog/spdlog.h>

namespace flowmon::coordinator {

void SensorLedger::associate(const std::string& sensor_id, std::string coverage) {
  entries_[sensor_id].coverage = std::move(coverage);
}

bool SensorLedger::associated(const std::string& sensor_id) const { return entries_.count(sensor_id) != 0; }

std::optional<DeltaUpdate> SensorLedger::ingest(const flow::FlowEvent& event, const std::string& location_id) {
  const auto it = entries_.find(event.sensor_id);
  if (it == entries_.end()) {
    ++unassociated_;
    spdlog::warn("event {}#{} from unassociated sensor dropped", event.sensor_id, event.event_seq);
    return std::nullopt;
  }
  SensorEntry& entry = it->second;
  if (event.event_seq <= entry.last_event_seq) {
    ++duplicates_;
    return std::nullopt;
  }
  entry.last_event_seq = event.event_seq;
  entry.difference += event.direction;
  return DeltaUpdate{location_id, event.sensor_id, event.event_seq, event.direction, event.timestamp_ms};
}

bool DeltaQueue::push(DeltaUpdate update) {
  std::lock_guard lock(mu_);
  if (items_.size() >= capacity_) {
    ++rejected_;
    return false;
  }
  items_.push_back(std::move(update));
  return true;
}

std::optional<DeltaUpdate> DeltaQueue::front() const {
  std::lock_guard lock(mu_);
  if (items_.empty()) return std::nullopt;
  return items_.front();
}

void DeltaQueue::pop_front() {
  std::lock_guard lock(mu_);
  if (!items_.empty()) items_.pop_front();
}

std::size_t DeltaQueue::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

std::uint64_t DeltaQueue::rejected() const {
  std::lock_guard lock(mu_);
  return rejected_;
}

}  // namespace flowmon::coordinator
