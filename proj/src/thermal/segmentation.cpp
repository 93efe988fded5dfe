#include "flowmon/thermal/segmentation.hpp"

#include "flowmon/common/errors.hpp"

namespace flowmon::thermal {

Segmentation segment(const InterpolatedFrame& frame, const BackgroundModel& model,
                     double delta_threshold) {
  if (!(delta_threshold > 0.0)) throw ConfigError("delta_threshold must be positive");

  Segmentation out;
  for (std::size_t i = 0; i < UpscaledGrid::kSize; ++i) {
    const double diff = frame.cells[i] - model.cells[i];
    if (diff >= delta_threshold) {
      out.mask[i] = true;
      out.excess[i] = diff;
    }
  }
  return out;
}

}  // namespace flowmon::thermal
