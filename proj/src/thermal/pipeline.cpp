#include "flowmon/thermal/pipeline.hpp"

#include "flowmon/common/errors.hpp"
#include "flowmon/thermal/interpolation.hpp"

namespace flowmon::thermal {

ThermalPipeline::ThermalPipeline(PipelineConfig config) : config_(config) {
  if (!(config_.delta_threshold > 0.0)) throw ConfigError("delta_threshold must be positive");
  if (!(config_.background_alpha > 0.0 && config_.background_alpha <= 1.0)) {
    throw ConfigError("background_alpha must be in (0, 1]");
  }
}

std::vector<Cluster> ThermalPipeline::process(const ThermalFrame& frame) {
  if (last_seq_ && frame.seq <= *last_seq_) {
    ++diagnostics_.frames_dropped_out_of_order;
    return {};
  }

  const InterpolatedFrame upscaled = interpolate_bicubic(frame);
  last_seq_ = frame.seq;
  ++diagnostics_.frames_processed;

  if (!background_.warmed_up()) {
    background_ = update_background(background_, upscaled, Mask{}, config_.background_alpha);
    return {};
  }

  const Segmentation seg = segment(upscaled, background_, config_.delta_threshold);
  std::vector<Cluster> clusters = find_clusters(seg.mask, seg.excess);
  background_ = update_background(background_, upscaled, seg.mask, config_.background_alpha);
  return clusters;
}

}  // namespace flowmon::thermal
