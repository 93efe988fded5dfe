#include "flowmon/flow/flow_meter.hpp"

#include "flowmon/flow/crossing.hpp"

namespace flowmon::flow {

FlowMeter::FlowMeter(std::string sensor_id, thermal::PipelineConfig config, std::uint64_t first_seq)
    : pipeline_(config), emitter_(std::move(sensor_id), first_seq) {}

std::vector<FlowEvent> FlowMeter::on_frame(const thermal::ThermalFrame& frame) {
  const auto dropped_before = pipeline_.diagnostics().frames_dropped_out_of_order;
  last_clusters_ = pipeline_.process(frame);
  if (pipeline_.diagnostics().frames_dropped_out_of_order != dropped_before) return {};

  std::vector<Point> centroids;
  centroids.reserve(last_clusters_.size());
  for (const auto& c : last_clusters_) centroids.push_back(c.centroid);
  tracker_.associate(centroids, frame.timestamp_ms);

  std::vector<Crossing> crossings;
  for (Track& track : tracker_.tracks()) {
    for (const Crossing& c : detect_crossings(track)) crossings.push_back(c);
  }
  return emitter_.emit(crossings);
}

}  // namespace flowmon::flow
