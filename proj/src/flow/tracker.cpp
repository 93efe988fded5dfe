#include "flowmon/flow/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace flowmon::flow {

Zone zone_of(double row) {
  if (row < kZoneMidStart) return Zone::A;
  if (row < kZoneBStart) return Zone::Mid;
  return Zone::B;
}

void Track::append(std::int64_t timestamp_ms, Point p) {
  if (positions.size() == kMaxTrackPositions) positions.erase(positions.begin());
  positions.push_back({timestamp_ms, p.row, p.col});
  const Zone z = zone_of(p.row);
  if (zone_history.empty() || zone_history.back() != z) zone_history.push_back(z);
}

void Tracker::associate(const std::vector<Point>& centroids, std::int64_t timestamp_ms) {
  struct Candidate {
    double distance;
    std::size_t track;
    std::size_t centroid;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < tracks_.size(); ++t) {
    const TrackPoint& last = tracks_[t].last();
    if (last.timestamp_ms >= timestamp_ms) continue;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = std::hypot(centroids[c].row - last.row, centroids[c].col - last.col);
      if (d <= kMaxDisplacement) candidates.push_back({d, t, c});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.track, a.centroid) < std::tie(b.distance, b.track, b.centroid);
  });

  std::vector<bool> track_used(tracks_.size(), false);
  std::vector<bool> centroid_used(centroids.size(), false);
  assignment_.assign(centroids.size(), 0);
  for (const Candidate& cand : candidates) {
    if (track_used[cand.track] || centroid_used[cand.centroid]) continue;
    track_used[cand.track] = true;
    centroid_used[cand.centroid] = true;
    Track& track = tracks_[cand.track];
    track.append(timestamp_ms, centroids[cand.centroid]);
    track.missed_frames = 0;
    assignment_[cand.centroid] = track.track_id;
  }

  for (std::size_t t = 0; t < track_used.size(); ++t) {
    if (!track_used[t]) ++tracks_[t].missed_frames;
  }
  std::erase_if(tracks_, [](const Track& t) { return t.missed_frames >= kMaxMissedFrames; });

  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (centroid_used[c]) continue;
    Track track;
    track.track_id = next_id_++;
    track.append(timestamp_ms, centroids[c]);
    assignment_[c] = track.track_id;
    tracks_.push_back(std::move(track));
  }
}

}  // namespace flowmon::flow
