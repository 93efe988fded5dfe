#include "flowmon/flow/crossing.hpp"

namespace flowmon::flow {

std::vector<Crossing> detect_crossings(Track& track) {
  std::vector<Crossing> out;
  const std::int64_t ts = track.positions.empty() ? 0 : track.last().timestamp_ms;
  for (; track.zones_consumed < track.zone_history.size(); ++track.zones_consumed) {
    switch (track.zone_history[track.zones_consumed]) {
      case Zone::A:
        if (track.armed_backward) out.push_back({-1, ts});
        track.armed_forward = true;
        track.armed_backward = false;
        break;
      case Zone::B:
        if (track.armed_forward) out.push_back({+1, ts});
        track.armed_backward = true;
        track.armed_forward = false;
        break;
      case Zone::Mid:
        break;
    }
  }
  return out;
}

}  // namespace flowmon::flow
