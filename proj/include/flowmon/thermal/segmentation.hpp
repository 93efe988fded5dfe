#pragma once

#include "flowmon/thermal/background.hpp"
#include "flowmon/thermal/frame.hpp"

namespace flowmon::thermal {

inline constexpr double kDefaultDeltaThresholdC = 1.5;

struct Segmentation {
  Mask mask;
  UpscaledGrid excess;  // frame - background where mask is set, else 0
};

/// Marks cells at least `delta_threshold` above the background.
/// Throws ConfigError for a non-positive threshold.
Segmentation segment(const InterpolatedFrame& frame, const BackgroundModel& model,
                     double delta_threshold = kDefaultDeltaThresholdC);

}  // namespace flowmon::thermal
