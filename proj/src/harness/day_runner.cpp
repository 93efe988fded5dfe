#include "flowmon/harness/day_runner.hpp"

#include <cstdlib>
#include <fstream>

#include <spdlog/spdlog.h>

#include "flowmon/common/errors.hpp"
#include "flowmon/flow/flow_event.hpp"
#include "flowmon/harness/stack.hpp"
#include "flowmon/sim/render.hpp"
#include "flowmon/thermal/frame_io.hpp"

namespace flowmon::harness {

namespace {

std::ofstream open_artifact(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

DayReport run_day(const sim::Scenario& scenario, int day_index, const DayRunOptions& options) {
  sim::validate(scenario);
  DayReport report;
  report.day_index = day_index;
  const auto truth = sim::true_crossings(scenario);
  report.true_passes = truth.size();
  std::int64_t true_net = 0;
  for (const auto& c : truth) {
    (c.direction > 0 ? report.true_entries : report.true_exits)++;
    true_net += c.direction;
  }

  StackOptions so;
  so.start_ms = scenario.start_ms - 60'000;
  LocalStack stack(so);
  const std::string activity = stack.create_activity("Day " + std::to_string(day_index));
  const std::string device_id = "coord-1";
  coordinator::DeviceSettings settings{device_id, stack.register_device(device_id), "in-process",
                                       {{scenario.sensor_id, "main door"}}};
  stack.associate(device_id, activity);

  LocalDevice dev(stack, settings, options.faults);
  if (!dev.provision()) {
    report.complete = false;
    report.note = "provisioning timed out";
    return report;
  }

  std::ofstream frames, events, truth_out;
  if (!options.artifact_prefix.empty()) {
    frames = open_artifact(options.artifact_prefix + ".frames");
    events = open_artifact(options.artifact_prefix + ".events");
    truth_out = open_artifact(options.artifact_prefix + ".truth");
    sim::write_ground_truth(truth_out, truth);
  }

  sim::Renderer renderer(scenario);
  while (!renderer.done()) {
    const auto rendered = renderer.next();
    if (frames.is_open()) frames << thermal::format_frame_line(rendered.frame) << '\n';
    for (const auto& u : dev.feed(rendered.frame)) {
      (u.direction > 0 ? report.detected_entries : report.detected_exits)++;
      if (events.is_open()) {
        events << flow::format_event_line({u.sensor_id, u.event_seq, u.direction, u.timestamp_ms}) << '\n';
      }
    }
  }
  if (!dev.settle()) {
    report.complete = false;
    report.note = "deltas still unacknowledged at end of day";
  }

  const auto occ = stack.registry().query_occupancy(activity, stack.owner_token());
  report.occupancy_end = occ.occupancy;
  report.drift = std::llabs(occ.occupancy - true_net);
  if (const auto st = stack.broker().occupancy().state(activity)) report.underflows = st->anomaly_underflow;
  return report;
}

}  // namespace flowmon::harness
