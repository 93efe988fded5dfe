#include "flowmon/coordinator/device.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flowmon/broker/service.hpp"
#include "flowmon/common/errors.hpp"
#include "flowmon/common/random.hpp"

namespace flowmon::coordinator {

using nlohmann::json;

DeviceSettings load_device_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open device config " + path);
  DeviceSettings s;
  try {
    const json j = json::parse(in);
    s.device_id = j.at("device_id").get<std::string>();
    s.device_key = j.at("device_key").get<std::string>();
    s.broker = j.value("broker", std::string{"127.0.0.1:1883"});
    for (const auto& e : j.value("sensors", json::array())) {
      s.sensors.push_back({e.at("sensor_id").get<std::string>(), e.value("coverage", std::string{})});
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad device config " + path + ": " + e.what());
  }
  if (s.device_id.empty()) throw ConfigError("device_id is empty");
  if (!is_hex(s.device_key, 32)) throw ConfigError("device_key must be 32 hex digits");
  return s;
}

void save_device_settings(const std::string& path, const DeviceSettings& s) {
  json sensors = json::array();
  for (const auto& e : s.sensors) sensors.push_back({{"sensor_id", e.sensor_id}, {"coverage", e.coverage}});
  const json j{{"device_id", s.device_id}, {"device_key", s.device_key}, {"broker", s.broker}, {"sensors", sensors}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::string default_sensor_id(const std::string& device_id) { return device_id + "-s0"; }

Device::Device(std::shared_ptr<broker::ClientTransport> transport, const Clock& clock, DeviceSettings settings,
               std::uint64_t first_event_seq)
    : clock_(clock),
      settings_(std::move(settings)),
      first_event_seq_(first_event_seq),
      client_(std::make_unique<broker::BrokerClient>(std::move(transport), clock,
                                                     broker::ClientOptions{settings_.device_id, settings_.device_key})),
      provisioner_(*client_, clock, settings_.device_id, settings_.device_key),
      publisher_(*client_, queue_) {
  if (settings_.sensors.empty()) settings_.sensors.push_back({default_sensor_id(settings_.device_id), {}});
  for (const auto& s : settings_.sensors) ledger_.associate(s.sensor_id, s.coverage);
  client_->on_message([this](const std::string& topic, const std::string& payload) {
    std::lock_guard lock(inbox_mu_);
    inbox_.push_back({topic, payload, 0});
  });
  client_->on_ack([this](std::uint32_t mid) {
    std::lock_guard lock(inbox_mu_);
    inbox_.push_back({{}, {}, mid});
  });
}

void Device::start() {
  client_->subscribe(broker::key_topic(settings_.device_id));
  provisioner_.start();
}

void Device::tick() {
  client_->tick();
  std::vector<Inbound> batch;
  {
    std::lock_guard lock(inbox_mu_);
    batch.swap(inbox_);
  }
  for (const auto& in : batch) {
    if (in.ack_mid != 0) {
      publisher_.on_ack(in.ack_mid);
    } else {
      handle_message(in.topic, in.payload);
    }
  }
  provisioner_.tick();
  if (provisioned()) {
    ensure_meters();
    publisher_.pump();
  }
}

void Device::handle_message(const std::string& topic, const std::string& payload) {
  if (provisioner_.on_message(topic, payload)) {
    const auto cfg = provisioner_.config();
    if (cfg && occupancy_filter_ != broker::occupancy_topic(cfg->location_id) && !cfg->location_id.empty()) {
      occupancy_filter_ = broker::occupancy_topic(cfg->location_id);
      client_->subscribe(occupancy_filter_);
      spdlog::info("{}: provisioned for location {} ({})", settings_.device_id, cfg->location_id,
                   cfg->location_name);
    }
    return;
  }
  if (topic == broker::key_topic(settings_.device_id)) {
    std::string key;
    try {
      key = json::parse(payload).at("device_key").get<std::string>();
    } catch (const json::exception&) {
      spdlog::warn("{}: bad key message ignored", settings_.device_id);
      return;
    }
    if (key == settings_.device_key) return;
    spdlog::info("{}: key rotated, reconnecting", settings_.device_id);
    settings_.device_key = key;
    provisioner_.assembler().set_key(key);
    client_->set_key(key);
    if (on_key_rotated_) on_key_rotated_(settings_);
    client_->disconnect();
    client_->connect();
    return;
  }
  if (!occupancy_filter_.empty() && topic == occupancy_filter_) {
    try {
      last_occupancy_ = broker::decode_occupancy(payload).occupancy;
    } catch (const InputError& e) {
      spdlog::warn("{}: {}", settings_.device_id, e.what());
    }
  }
}

void Device::ensure_meters() {
  if (!meters_.empty()) return;
  thermal::PipelineConfig pc;
  pc.delta_threshold = provisioner_.config()->delta_threshold();
  for (const auto& s : settings_.sensors) meters_.try_emplace(s.sensor_id, s.sensor_id, pc, first_event_seq_);
}

bool Device::provisioned() const { return provisioner_.status() == Provisioner::Status::Done; }

void Device::check_rejected() const {
  if (provisioner_.status() == Provisioner::Status::Rejected) {
    throw AuthError(settings_.device_id + " rejected by broker: " + client_->reject_reason());
  }
}

const flow::FlowMeter* Device::meter(const std::string& sensor_id) const {
  const auto it = meters_.find(sensor_id);
  return it == meters_.end() ? nullptr : &it->second;
}

std::vector<DeltaUpdate> Device::on_frame(const thermal::ThermalFrame& frame) {
  if (!provisioned()) {
    ++early_frames_;
    return {};
  }
  ensure_meters();
  const std::string location = provisioner_.config()->location_id;
  std::vector<DeltaUpdate> accepted;
  const auto it = meters_.find(frame.sensor_id);
  if (it == meters_.end()) {
    // Unknown sensor: the ledger counts and logs it.
    flow::FlowEvent probe{frame.sensor_id, frame.seq, 0, frame.timestamp_ms};
    (void)ledger_.ingest(probe, location);
    return accepted;
  }
  it->second.on_frame(frame);
  for (const auto& ev : it->second.emitter().drain()) {
    if (location.empty()) continue;  // not yet associated with a location
    auto update = ledger_.ingest(ev, location);
    if (!update) continue;
    if (!queue_.push(*update)) {
      spdlog::warn("{}: delta queue full, update {}#{} rejected", settings_.device_id, update->sensor_id,
                   update->event_seq);
      continue;
    }
    accepted.push_back(std::move(*update));
  }
  publisher_.pump();
  return accepted;
}

}  // namespace flowmon::coordinator
