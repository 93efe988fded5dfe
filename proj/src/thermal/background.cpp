#include "flowmon/thermal/background.hpp"

#include "flowmon/common/errors.hpp"

namespace flowmon::thermal {

BackgroundModel update_background(const BackgroundModel& model, const InterpolatedFrame& frame,
                                  const Mask& occupied, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("background alpha must be in (0, 1]");

  BackgroundModel next = model;
  next.frames_absorbed = model.frames_absorbed + 1;

  if (next.frames_absorbed <= kWarmupFrames) {
    const double a = 1.0 / static_cast<double>(next.frames_absorbed);
    for (std::size_t i = 0; i < UpscaledGrid::kSize; ++i) {
      next.cells[i] = (1.0 - a) * model.cells[i] + a * frame.cells[i];
    }
    return next;
  }

  for (std::size_t i = 0; i < UpscaledGrid::kSize; ++i) {
    if (occupied[i]) continue;
    next.cells[i] = (1.0 - alpha) * model.cells[i] + alpha * frame.cells[i];
  }
  return next;
}

}  // namespace flowmon::thermal
