#pragma once

#include <cstdint>

#include "flowmon/sim/scenario.hpp"

namespace flowmon::sim {

struct DayOptions {
  double duration_s = 1200.0;  // a working day compressed to 20 simulated minutes
  double ambient_c = 22.0;
  double noise_sigma_c = 0.3;
  double fps = 10.0;
  double warmup_s = 3.0;       // empty room while the background settles
  double min_headway_s = 2.0;  // a single door passes one person at a time
  double min_speed_mps = 0.8;
  double max_speed_mps = 1.4;
  double min_col = 2.0;
  double max_col = 5.0;
  std::string sensor_id = "sensor-1";
};

/// Number of passes actually generated: odd requests round up so every day
/// closes at zero occupancy.
std::uint64_t balanced_pass_count(std::uint64_t passes);

/// A balanced day: n/2 entries and n/2 exits whose midline crossings are
/// uniformly scattered (conditioned Poisson) with a minimum headway. Directions are assigned in midline
/// crossing order so true occupancy never goes negative.
Scenario make_test_day(std::uint64_t passes, std::uint64_t seed, const DayOptions& options = {});

}  // namespace flowmon::sim
