#pragma once

#include <cstdint>
#include <vector>

#include "flowmon/thermal/clustering.hpp"

namespace flowmon::flow {

using thermal::Point;

// Counting zones along the row axis of the 24x24 grid. The row axis is the
// door normal; the sensor must be mounted so people walk along it.
enum class Zone { A, Mid, B };

inline constexpr double kZoneMidStart = 8.5;   // rows 0-8 are A
inline constexpr double kZoneBStart = 14.5;    // rows 15-23 are B

Zone zone_of(double row);

inline constexpr double kMaxDisplacement = 6.0;
inline constexpr int kMaxMissedFrames = 3;
inline constexpr std::size_t kMaxTrackPositions = 256;

struct TrackPoint {
  std::int64_t timestamp_ms = 0;
  double row = 0.0;
  double col = 0.0;
};

struct Track {
  std::uint64_t track_id = 0;
  std::vector<TrackPoint> positions;  // most recent kMaxTrackPositions
  std::vector<Zone> zone_history;     // consecutive duplicates collapsed
  int missed_frames = 0;
  bool armed_forward = false;   // last side visited was A
  bool armed_backward = false;  // last side visited was B
  std::size_t zones_consumed = 0;  // zone_history prefix already scanned for crossings

  const TrackPoint& last() const { return positions.back(); }
  void append(std::int64_t timestamp_ms, Point p);
};

/// Greedy nearest-neighbour association. Candidate (track, centroid) pairs
/// within kMaxDisplacement are matched in ascending distance; each side is
/// used at most once. Unmatched centroids start tracks; tracks unmatched for
/// kMaxMissedFrames consecutive frames are retired.
class Tracker {
 public:
  void associate(const std::vector<Point>& centroids, std::int64_t timestamp_ms);

  std::vector<Track>& tracks() { return tracks_; }
  const std::vector<Track>& tracks() const { return tracks_; }

  /// Track ids matched or spawned by the last associate() call, in centroid order.
  const std::vector<std::uint64_t>& assignment() const { return assignment_; }

 private:
  std::vector<Track> tracks_;
  std::vector<std::uint64_t> assignment_;
  std::uint64_t next_id_ = 1;
};

}  // namespace flowmon::flow
