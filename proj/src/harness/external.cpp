#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flowmon/broker/tcp.hpp"
#include "flowmon/common/errors.hpp"
#include "flowmon/coordinator/device.hpp"
#include "flowmon/flow/flow_event.hpp"
#include "flowmon/harness/manifest.hpp"
#include "flowmon/sim/render.hpp"
#include "flowmon/thermal/frame_io.hpp"

namespace flowmon::harness {

namespace {

std::int64_t fetch_occupancy(const ExternalTarget& t) {
  const auto ep = broker::parse_endpoint(t.registry);
  httplib::Client http(ep.host, ep.port);
  http.set_connection_timeout(5);
  httplib::Headers headers;
  if (!t.token.empty()) headers.emplace("Authorization", "Bearer " + t.token);
  const auto res = http.Get("/activities/" + t.activity_id + "/occupancy", headers);
  if (!res) throw ConfigError("registry " + t.registry + " unreachable");
  if (res->status != 200) {
    throw ConfigError("registry answered " + std::to_string(res->status) + " for " + t.activity_id);
  }
  return nlohmann::json::parse(res->body).at("occupancy").get<std::int64_t>();
}

void sleep_ms(int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

}  // namespace

DayReport run_day_external(sim::Scenario scenario, int day_index, const ExternalTarget& target,
                           const std::string& artifact_prefix) {
  SystemClock clock;
  // Fresh timestamps and event ids so repeated days never collide with
  // what the broker has already journaled.
  scenario.start_ms = clock.now_ms();
  const std::uint64_t first_seq = static_cast<std::uint64_t>(clock.now_ms()) * 1000;

  DayReport report;
  report.day_index = day_index;
  const auto truth = sim::true_crossings(scenario);
  report.true_passes = truth.size();
  std::int64_t true_net = 0;
  for (const auto& c : truth) {
    (c.direction > 0 ? report.true_entries : report.true_exits)++;
    true_net += c.direction;
  }

  const std::int64_t occupancy_start = fetch_occupancy(target);

  auto settings = coordinator::load_device_settings(target.device_config);
  settings.broker = target.broker;
  settings.sensors = {{scenario.sensor_id, "main door"}};
  auto transport = std::make_shared<broker::TcpClientTransport>(broker::parse_endpoint(target.broker));
  coordinator::Device device(transport, clock, settings, first_seq);
  device.start();

  const auto provision_deadline = clock.now_ms() + 30'000;
  while (!device.provisioned()) {
    device.tick();
    device.check_rejected();
    if (clock.now_ms() > provision_deadline) throw ConfigError("broker " + target.broker + " did not provision us");
    sleep_ms(10);
  }
  if (device.config()->location_id != target.activity_id) {
    throw ConfigError("device is associated with '" + device.config()->location_id + "', not " + target.activity_id);
  }

  std::ofstream frames, events, truth_out;
  if (!artifact_prefix.empty()) {
    frames.open(artifact_prefix + ".frames", std::ios::trunc);
    events.open(artifact_prefix + ".events", std::ios::trunc);
    truth_out.open(artifact_prefix + ".truth", std::ios::trunc);
    sim::write_ground_truth(truth_out, truth);
  }

  sim::Renderer renderer(scenario);
  while (!renderer.done()) {
    const auto rendered = renderer.next();
    if (frames.is_open()) frames << thermal::format_frame_line(rendered.frame) << '\n';
    for (const auto& u : device.on_frame(rendered.frame)) {
      (u.direction > 0 ? report.detected_entries : report.detected_exits)++;
      if (events.is_open()) {
        events << flow::format_event_line({u.sensor_id, u.event_seq, u.direction, u.timestamp_ms}) << '\n';
      }
    }
    device.tick();
  }

  const auto settle_deadline = clock.now_ms() + 60'000;
  while (device.queue().size() > 0 || device.publisher().in_flight()) {
    if (clock.now_ms() > settle_deadline) {
      report.complete = false;
      report.note = "deltas still unacknowledged after 60 s";
      break;
    }
    device.tick();
    sleep_ms(5);
  }
  device.client().disconnect();

  const std::int64_t occupancy_end = fetch_occupancy(target);
  report.occupancy_end = occupancy_end;
  report.drift = std::llabs(occupancy_end - occupancy_start - true_net);
  return report;
}

}  // namespace flowmon::harness
