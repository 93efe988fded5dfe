#pragma once

#include <string>
#include <vector>

#include "flowmon/flow/emitter.hpp"
#include "flowmon/flow/tracker.hpp"
#include "flowmon/thermal/pipeline.hpp"

namespace flowmon::flow {

/// Sensor-side counter: thermal pipeline, centroid tracker and event
/// emitter for one sensor stream.
class FlowMeter {
 public:
  FlowMeter(std::string sensor_id, thermal::PipelineConfig config = {}, std::uint64_t first_seq = 1);

  /// Processes one frame; returns the events it produced (also queued).
  std::vector<FlowEvent> on_frame(const thermal::ThermalFrame& frame);

  /// Clusters found in the most recent frame.
  const std::vector<thermal::Cluster>& last_clusters() const { return last_clusters_; }

  const thermal::ThermalPipeline& pipeline() const { return pipeline_; }
  const Tracker& tracker() const { return tracker_; }
  EventEmitter& emitter() { return emitter_; }
  const EventEmitter& emitter() const { return emitter_; }

 private:
  thermal::ThermalPipeline pipeline_;
  Tracker tracker_;
  EventEmitter emitter_;
  std::vector<thermal::Cluster> last_clusters_;
};

}  // namespace flowmon::flow
