#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "flowmon/thermal/background.hpp"
#include "flowmon/thermal/clustering.hpp"
#include "flowmon/thermal/frame.hpp"
#include "flowmon/thermal/segmentation.hpp"

namespace flowmon::thermal {

struct PipelineConfig {
  double delta_threshold = kDefaultDeltaThresholdC;
  double background_alpha = kBackgroundAlpha;
  bool operator==(const PipelineConfig&) const = default;
};

struct PipelineDiagnostics {
  std::uint64_t frames_processed = 0;
  std::uint64_t frames_dropped_out_of_order = 0;
  bool operator==(const PipelineDiagnostics&) const = default;
};

/// Per-sensor processing state. Copyable; process() is a pure function of
/// (state, frame), so two copies fed the same frames stay equal.
class ThermalPipeline {
 public:
  explicit ThermalPipeline(PipelineConfig config = {});

  /// interpolate -> segment -> find_clusters -> update_background.
  /// Frames whose seq does not exceed the last accepted one are dropped and
  /// counted. While the background is warming up no clusters are reported.
  std::vector<Cluster> process(const ThermalFrame& frame);

  const BackgroundModel& background() const { return background_; }
  const PipelineDiagnostics& diagnostics() const { return diagnostics_; }
  const PipelineConfig& config() const { return config_; }

  bool operator==(const ThermalPipeline&) const = default;

 private:
  PipelineConfig config_;
  BackgroundModel background_;
  std::optional<std::uint64_t> last_seq_;
  PipelineDiagnostics diagnostics_;
};

}  // namespace flowmon::thermal
