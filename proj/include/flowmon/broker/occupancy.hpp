#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace flowmon::broker {

struct OccupancyState {
  std::string location_id;
  std::int64_t occupancy = 0;
  std::int64_t as_of_ms = 0;
  std::uint64_t anomaly_underflow = 0;
  std::uint64_t applied_events = 0;
  bool operator==(const OccupancyState&) const = default;
};

struct HistoryPoint {
  std::int64_t timestamp_ms = 0;
  std::int64_t occupancy = 0;
  bool operator==(const HistoryPoint&) const = default;
};

struct ApplyResult {
  enum class Status { Applied, Duplicate, UnknownLocation } status = Status::Applied;
  OccupancyState state;
  bool underflow = false;
};

/// Per-location occupancy with exactly-once application of
/// (sensor_id, event_seq) ids and a floor at zero.
///
/// Persistence, when a journal path is given:
///   journal   one applied event per line:
///             `location_id sensor_id event_seq direction timestamp_ms`
///   snapshot  `#journal_lines N` header, then `location_id occupancy as_of_ms`
///             per location, covering the first N journal lines.
/// Recovery loads the snapshot and replays the journal lines after it; the
/// full journal is scanned to rebuild the dedup set and history.
class OccupancyStore {
 public:
  OccupancyStore() = default;
  /// Opens (and recovers from) the journal; the snapshot lives next to it at
  /// `<journal>.snapshot`.
  explicit OccupancyStore(std::string journal_path);

  OccupancyStore(const OccupancyStore&) = delete;
  OccupancyStore& operator=(const OccupancyStore&) = delete;

  void add_location(const std::string& location_id);
  bool has_location(const std::string& location_id) const;
  std::vector<std::string> locations() const;

  ApplyResult apply(const std::string& location_id, const std::string& sensor_id, std::uint64_t event_seq,
                    int direction, std::int64_t timestamp_ms);

  std::optional<OccupancyState> state(const std::string& location_id) const;

  /// Occupancy after each applied event with from_ms <= timestamp <= to_ms.
  std::vector<HistoryPoint> history(const std::string& location_id, std::int64_t from_ms, std::int64_t to_ms) const;

  void write_snapshot();
  /// Writes a snapshot if `interval_ms` has elapsed since the last one.
  void maybe_snapshot(std::int64_t now_ms, std::int64_t interval_ms);

  const std::string& journal_path() const { return journal_path_; }
  std::string snapshot_path() const { return journal_path_.empty() ? "" : journal_path_ + ".snapshot"; }

  /// Canonical text of all location states, for equality checks.
  std::string dump() const;

 private:
  struct Location {
    OccupancyState state;
    std::set<std::pair<std::string, std::uint64_t>> seen;
    std::vector<HistoryPoint> history;
  };

  void recover();
  static void step(Location& loc, int direction, std::int64_t timestamp_ms, bool& underflow);
  void write_snapshot_locked();

  mutable std::mutex mu_;
  std::map<std::string, Location> locations_;
  std::string journal_path_;
  std::ofstream journal_;
  std::uint64_t journal_lines_ = 0;
  std::int64_t last_snapshot_ms_ = 0;
};

}  // namespace flowmon::broker
