#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "flowmon/flow/flow_event.hpp"

namespace flowmon::coordinator {

/// One consolidated ±1 change for a location, carrying the end-to-end event
/// id (sensor_id, event_seq) used for dedup downstream.
struct DeltaUpdate {
  std::string location_id;
  std::string sensor_id;
  std::uint64_t event_seq = 0;
  int direction = 0;
  std::int64_t timestamp_ms = 0;
  bool operator==(const DeltaUpdate&) const = default;
};

struct SensorEntry {
  std::uint64_t last_event_seq = 0;
  std::int64_t difference = 0;  // running sum of accepted directions
  std::string coverage;         // declared area descriptor
  bool operator==(const SensorEntry&) const = default;
};

/// Per-sensor difference values. Events at or below a sensor's last
/// accepted seq are ignored, so redelivery is harmless.
class SensorLedger {
 public:
  void associate(const std::string& sensor_id, std::string coverage = {});
  bool associated(const std::string& sensor_id) const;

  /// Returns the update to forward, or nullopt for a duplicate or an event
  /// from an unassociated sensor (logged and counted).
  std::optional<DeltaUpdate> ingest(const flow::FlowEvent& event, const std::string& location_id);

  const std::map<std::string, SensorEntry>& entries() const { return entries_; }
  std::uint64_t duplicates() const { return duplicates_; }
  std::uint64_t unassociated_drops() const { return unassociated_; }

 private:
  std::map<std::string, SensorEntry> entries_;
  std::uint64_t duplicates_ = 0;
  std::uint64_t unassociated_ = 0;
};

inline constexpr std::size_t kDeltaQueueCapacity = 100'000;

/// Bounded hand-off between the ingestion and publication contexts. When
/// full, new updates are rejected (and counted) so queued order is never
/// disturbed.
class DeltaQueue {
 public:
  explicit DeltaQueue(std::size_t capacity = kDeltaQueueCapacity) : capacity_(capacity) {}

  bool push(DeltaUpdate update);
  std::optional<DeltaUpdate> front() const;
  void pop_front();
  std::size_t size() const;
  std::uint64_t rejected() const;

 private:
  mutable std::mutex mu_;
  std::deque<DeltaUpdate> items_;
  std::size_t capacity_;
  std::uint64_t rejected_ = 0;
};

}  // namespace flowmon::coordinator
