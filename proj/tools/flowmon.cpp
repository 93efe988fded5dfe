// flowmon: one binary for every component and experiment.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "flowmon/broker/service.hpp"
#include "flowmon/broker/tcp.hpp"
#include "flowmon/broker/whitelist.hpp"
#include "flowmon/common/errors.hpp"
#include "flowmon/common/random.hpp"
#include "flowmon/coordinator/device.hpp"
#include "flowmon/harness/manifest.hpp"
#include "flowmon/harness/report.hpp"
#include "flowmon/registry/http_api.hpp"
#include "flowmon/registry/registry.hpp"
#include "flowmon/sim/render.hpp"
#include "flowmon/sim/test_day.hpp"
#include "flowmon/thermal/frame_io.hpp"

using namespace flowmon;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void ready(const std::string& what) {
  std::cout << what << std::endl;
}

struct BrokerArgs {
  std::string listen = "127.0.0.1:1883";
  std::string whitelist;
  std::string journal;
  double snapshot_interval_s = 60.0;
};

void add_broker_flags(CLI::App* cmd, BrokerArgs& a) {
  cmd->add_option("--listen", a.listen, "broker address host:port");
  cmd->add_option("--whitelist", a.whitelist, "whitelist file")->required();
  cmd->add_option("--journal", a.journal, "occupancy journal (snapshot goes next to it)");
  cmd->add_option("--snapshot-interval", a.snapshot_interval_s, "seconds between snapshots")
      ->check(CLI::PositiveNumber);
}

broker::BrokerOptions broker_options(const BrokerArgs& a) {
  return {a.whitelist, a.journal, static_cast<std::int64_t>(a.snapshot_interval_s * 1000)};
}

int cmd_broker(const BrokerArgs& a) {
  SystemClock clock;
  broker::BrokerService service(clock, broker_options(a));
  broker::TcpBrokerServer server(service.core(), [&] { service.tick(); });
  server.start(broker::parse_endpoint(a.listen));
  ready("flowmon broker ready on " + broker::parse_endpoint(a.listen).host + ":" + std::to_string(server.port()));
  wait_for_signal();
  server.stop();
  service.occupancy().write_snapshot();
  return 0;
}

struct RegistryArgs {
  BrokerArgs broker;
  std::string http = "127.0.0.1:8080";
  std::string state;
  std::vector<std::string> business_emails;
  std::string geocoder_table;
  std::uint32_t iterations = registry::kDefaultPbkdf2Iterations;
};

int cmd_registry(const RegistryArgs& a) {
  SystemClock clock;
  broker::BrokerService service(clock, broker_options(a.broker));
  registry::RegistryOptions ro;
  ro.state_path = a.state;
  ro.business_emails = {a.business_emails.begin(), a.business_emails.end()};
  ro.pbkdf2_iterations = a.iterations;
  registry::StubGeocoder geocoder =
      a.geocoder_table.empty() ? registry::StubGeocoder() : registry::StubGeocoder::from_file(a.geocoder_table);
  registry::Registry reg(service, geocoder, ro);

  broker::TcpBrokerServer server(service.core(), [&] { service.tick(); });
  server.start(broker::parse_endpoint(a.broker.listen));
  const auto http_ep = broker::parse_endpoint(a.http);
  registry::HttpApi api(reg);
  api.start(http_ep.host, http_ep.port);
  ready("flowmon registry ready: broker " + broker::parse_endpoint(a.broker.listen).host + ":" +
        std::to_string(server.port()) + ", http " + http_ep.host + ":" + std::to_string(api.port()));
  wait_for_signal();
  api.stop();
  server.stop();
  service.occupancy().write_snapshot();
  return 0;
}

struct AddDeviceArgs {
  std::string whitelist;
  std::string device_id;
  std::string out;
  std::string broker = "127.0.0.1:1883";
  double delta_threshold = 1.5;
};

int cmd_add_device(const AddDeviceArgs& a) {
  broker::Whitelist wl;
  if (std::ifstream(a.whitelist).good()) wl.load(a.whitelist);
  broker::DeviceRecord rec;
  rec.device_id = a.device_id;
  rec.keys = {random_hex(broker::kKeyHexLength / 2)};
  rec.constants = {{"delta_threshold", a.delta_threshold}};
  wl.add_device(rec);
  wl.save(a.whitelist);
  coordinator::save_device_settings(a.out, {a.device_id, rec.keys.front(), a.broker, {}});
  std::cout << "added " << a.device_id << " to " << a.whitelist << ", settings in " << a.out << "\n";
  return 0;
}

struct DeviceArgs {
  std::string config;
  std::string frames;
  std::string scenario;
  bool realtime = false;
};

int cmd_device(const DeviceArgs& a) {
  auto settings = coordinator::load_device_settings(a.config);
  SystemClock clock;
  auto transport = std::make_shared<broker::TcpClientTransport>(broker::parse_endpoint(settings.broker));

  std::vector<thermal::ThermalFrame> frames;
  if (!a.frames.empty()) {
    std::ifstream in(a.frames);
    if (!in) throw ConfigError("cannot open " + a.frames);
    frames = thermal::read_frame_dump(in);
  } else if (!a.scenario.empty()) {
    auto sc = sim::load_scenario(a.scenario);
    sc.start_ms = clock.now_ms();
    sim::Renderer r(sc);
    while (!r.done()) frames.push_back(r.next().frame);
  }
  if (!frames.empty() && settings.sensors.empty()) settings.sensors = {{frames.front().sensor_id, {}}};

  coordinator::Device device(transport, clock, settings, static_cast<std::uint64_t>(clock.now_ms()) * 1000);
  device.on_key_rotated([&](const coordinator::DeviceSettings& s) { coordinator::save_device_settings(a.config, s); });
  device.start();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  while (!device.provisioned() && !g_stop) {
    device.tick();
    device.check_rejected();
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (g_stop) return 0;
  const auto cfg = *device.config();
  ready("flowmon device " + cfg.device_id + " provisioned: location '" + cfg.location_id + "' (" +
        cfg.location_name + ")");

  std::int64_t first_ts = frames.empty() ? 0 : frames.front().timestamp_ms;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& f : frames) {
    if (g_stop) break;
    if (a.realtime) std::this_thread::sleep_until(t0 + std::chrono::milliseconds(f.timestamp_ms - first_ts));
    for (const auto& u : device.on_frame(f)) {
      spdlog::info("{} #{} direction {:+d}", u.sensor_id, u.event_seq, u.direction);
    }
    device.tick();
    device.check_rejected();
  }
  // Idle: keep serving until every delta is acknowledged (input given) or
  // until interrupted (no input).
  while (!g_stop) {
    device.tick();
    device.check_rejected();
    if (!frames.empty() && device.queue().size() == 0 && !device.publisher().in_flight()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  if (const auto occ = device.last_occupancy()) std::cout << "occupancy " << *occ << "\n";
  device.client().disconnect();
  return 0;
}

int cmd_simulate(const std::string& manifest_path) {
  const auto manifest = harness::load_manifest(manifest_path);
  const auto result = harness::run_manifest(manifest, &std::cerr);
  std::cout << harness::report_table(result.days);
  if (!result.complete) {
    std::cout << "report INCOMPLETE\n";
    return 1;
  }
  return 0;
}

int cmd_query(const std::string& activity_id, const std::string& registry, const std::string& token) {
  const auto ep = broker::parse_endpoint(registry);
  httplib::Client http(ep.host, ep.port);
  http.set_connection_timeout(5);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  const auto res = http.Get("/activities/" + activity_id + "/occupancy", headers);
  if (!res) {
    std::cerr << "registry " << registry << " unreachable\n";
    return 1;
  }
  if (res->status != 200) {
    std::cerr << activity_id << ": not found (" << res->status << ")\n";
    return 1;
  }
  const auto j = nlohmann::json::parse(res->body);
  std::cout << "activity " << activity_id << " occupancy " << j.at("occupancy").get<std::int64_t>() << " capacity "
            << (j.at("capacity").is_null() ? std::string("hidden") : j.at("capacity").dump()) << " as_of "
            << j.at("as_of").get<std::int64_t>() << "\n";
  return 0;
}

struct ScenarioArgs {
  std::uint64_t passes = 42;
  std::uint64_t seed = 1;
  double noise = 0.3;
  double duration = 1200.0;
  std::string out;
  std::string frames;
  std::string truth;
};

int cmd_scenario_gen(const ScenarioArgs& a) {
  sim::DayOptions opt;
  opt.noise_sigma_c = a.noise;
  opt.duration_s = a.duration;
  const auto sc = sim::make_test_day(a.passes, a.seed, opt);
  sim::save_scenario(sc, a.out);
  if (!a.frames.empty()) {
    std::ofstream out(a.frames, std::ios::trunc);
    sim::Renderer r(sc);
    while (!r.done()) out << thermal::format_frame_line(r.next().frame) << '\n';
  }
  if (!a.truth.empty()) {
    std::ofstream out(a.truth, std::ios::trunc);
    sim::write_ground_truth(out, sim::true_crossings(sc));
  }
  std::cout << "wrote " << a.out << " (" << sc.persons.size() << " passes)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("flowmon"));
  CLI::App app{"people-flow monitoring: broker, registry, devices and simulation"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  BrokerArgs broker_args;
  auto* broker_cmd = app.add_subcommand("broker", "run the message broker");
  add_broker_flags(broker_cmd, broker_args);

  RegistryArgs reg_args;
  auto* reg_cmd = app.add_subcommand("registry", "run the registry HTTP API with its broker");
  add_broker_flags(reg_cmd, reg_args.broker);
  reg_cmd->add_option("--http", reg_args.http, "HTTP address host:port");
  reg_cmd->add_option("--state", reg_args.state, "registry state file");
  reg_cmd->add_option("--business-email", reg_args.business_emails, "accounts granted the business role");
  reg_cmd->add_option("--geocoder-table", reg_args.geocoder_table, "JSON {address: [lat, lon]}");
  reg_cmd->add_option("--pbkdf2-iterations", reg_args.iterations, "password hash cost")->check(CLI::PositiveNumber);

  AddDeviceArgs add_args;
  auto* add_cmd = app.add_subcommand("add-device", "whitelist a new device and write its settings file");
  add_cmd->add_option("--whitelist", add_args.whitelist)->required();
  add_cmd->add_option("--device-id", add_args.device_id)->required();
  add_cmd->add_option("--out", add_args.out, "device settings file to write")->required();
  add_cmd->add_option("--broker", add_args.broker, "broker address for the device");
  add_cmd->add_option("--delta-threshold", add_args.delta_threshold, "segmentation threshold, C");

  DeviceArgs dev_args;
  auto* dev_cmd = app.add_subcommand("device", "run a coordinator device");
  dev_cmd->add_option("--config", dev_args.config, "device settings file")->required();
  auto* frames_opt = dev_cmd->add_option("--frames", dev_args.frames, "replay a frame dump");
  dev_cmd->add_option("--scenario", dev_args.scenario, "render and replay a scenario")->excludes(frames_opt);
  dev_cmd->add_flag("--realtime", dev_args.realtime, "pace frames by their timestamps");

  std::string manifest;
  auto* sim_cmd = app.add_subcommand("simulate", "run the days of a manifest end to end");
  sim_cmd->add_option("--manifest", manifest)->required();

  std::string query_id, query_registry = "127.0.0.1:8080", query_token;
  auto* query_cmd = app.add_subcommand("query", "print an activity's occupancy");
  query_cmd->add_option("activity_id", query_id)->required();
  query_cmd->add_option("--registry", query_registry, "registry HTTP address");
  query_cmd->add_option("--token", query_token, "bearer token");

  ScenarioArgs sc_args;
  auto* sc_cmd = app.add_subcommand("scenario", "scenario tools");
  sc_cmd->require_subcommand(1);
  auto* gen_cmd = sc_cmd->add_subcommand("gen", "generate a balanced test day");
  gen_cmd->add_option("--passes", sc_args.passes);
  gen_cmd->add_option("--seed", sc_args.seed);
  gen_cmd->add_option("--noise", sc_args.noise, "noise sigma, C")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--duration", sc_args.duration, "seconds")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", sc_args.out)->required();
  gen_cmd->add_option("--frames", sc_args.frames, "also write the rendered frame dump");
  gen_cmd->add_option("--truth", sc_args.truth, "also write the ground truth");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*broker_cmd) return cmd_broker(broker_args);
    if (*reg_cmd) return cmd_registry(reg_args);
    if (*add_cmd) return cmd_add_device(add_args);
    if (*dev_cmd) return cmd_device(dev_args);
    if (*sim_cmd) return cmd_simulate(manifest);
    if (*query_cmd) return cmd_query(query_id, query_registry, query_token);
    if (*gen_cmd) return cmd_scenario_gen(sc_args);
  } catch (const AuthError& e) {
    std::cerr << "authorization error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
