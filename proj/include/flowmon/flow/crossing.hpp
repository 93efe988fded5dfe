#pragma once

#include <cstdint>
#include <vector>

#include "flowmon/flow/tracker.hpp"

namespace flowmon::flow {

struct Crossing {
  int direction = 0;  // +1 A->B, -1 B->A
  std::int64_t timestamp_ms = 0;
};

/// Scans the zone-history entries added since the previous call. Visiting
/// A arms the forward direction, visiting B arms the backward one; reaching
/// the opposite side while armed fires once and re-arms the other way.
/// Passing through MID never fires on its own.
std::vector<Crossing> detect_crossings(Track& track);

}  // namespace flowmon::flow
