#pragma once

#include <cstdint>

#include "flowmon/thermal/frame.hpp"

namespace flowmon::thermal {

inline constexpr double kBackgroundAlpha = 0.02;
inline constexpr std::uint32_t kWarmupFrames = 10;

/// Per-cell ambient estimate. During the first kWarmupFrames updates the
/// model is the running mean of everything seen; afterwards it is an EMA
/// that skips cells flagged as occupied.
struct BackgroundModel {
  UpscaledGrid cells;
  std::uint32_t frames_absorbed = 0;

  bool warmed_up() const { return frames_absorbed >= kWarmupFrames; }
  bool operator==(const BackgroundModel&) const = default;
};

BackgroundModel update_background(const BackgroundModel& model, const InterpolatedFrame& frame,
                                  const Mask& occupied, double alpha = kBackgroundAlpha);

}  // namespace flowmon::thermal
