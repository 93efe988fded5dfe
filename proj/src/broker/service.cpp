#include "flowmon/broker/service.hpp"

#include <spdlog/spdlog.h>

#include "flowmon/broker/topic.hpp"
#include "flowmon/common/errors.hpp"

namespace flowmon::broker {

using nlohmann::json;

std::string hello_topic(const std::string& device_id) { return "devices/" + device_id + "/hello"; }
std::string config_topic(const std::string& device_id, const std::string& part) {
  return "devices/" + device_id + "/config/" + part;
}
std::string key_topic(const std::string& device_id) { return "devices/" + device_id + "/key"; }
std::string delta_topic(const std::string& location_id) { return "locations/" + location_id + "/delta"; }
std::string occupancy_topic(const std::string& location_id) { return "locations/" + location_id + "/occupancy"; }

std::string encode_delta(const DeltaPayload& d) {
  return json{{"sensor_id", d.sensor_id}, {"event_seq", d.event_seq}, {"direction", d.direction},
              {"timestamp_ms", d.timestamp_ms}}
      .dump();
}

DeltaPayload decode_delta(const std::string& payload) {
  try {
    const json j = json::parse(payload);
    DeltaPayload d;
    d.sensor_id = j.at("sensor_id").get<std::string>();
    d.event_seq = j.at("event_seq").get<std::uint64_t>();
    d.direction = j.at("direction").get<int>();
    d.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    if (d.direction != 1 && d.direction != -1) throw InputError("direction must be +1 or -1");
    return d;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad delta payload: ") + e.what());
  }
}

std::string encode_occupancy(const OccupancyPayload& o) {
  return json{{"location_id", o.location_id}, {"occupancy", o.occupancy}, {"timestamp_ms", o.timestamp_ms}}.dump();
}

OccupancyPayload decode_occupancy(const std::string& payload) {
  try {
    const json j = json::parse(payload);
    return {j.at("location_id").get<std::string>(), j.at("occupancy").get<std::int64_t>(),
            j.at("timestamp_ms").get<std::int64_t>()};
  } catch (const json::exception& e) {
    throw InputError(std::string("bad occupancy payload: ") + e.what());
  }
}

BrokerService::BrokerService(const Clock& clock, BrokerOptions options)
    : clock_(clock),
      options_(std::move(options)),
      store_(options_.journal_path.empty() ? std::make_unique<OccupancyStore>()
                                           : std::make_unique<OccupancyStore>(options_.journal_path)),
      core_(whitelist_, clock_) {
  if (!options_.whitelist_path.empty()) whitelist_.load(options_.whitelist_path);
  saved_version_ = whitelist_.version();
  sync_locations();

  core_.add_interceptor("devices/+/hello", [this](const Message& msg, const Origin& origin) {
    const auto rec = whitelist_.device(origin.device_id);
    if (!rec) throw InputError("hello from unregistered device " + origin.device_id);
    spdlog::info("provisioning {}", origin.device_id);
    (void)msg;
    return config_messages(*rec);
  });

  core_.add_interceptor("locations/+/delta", [this](const Message& msg, const Origin& origin) {
    const std::string location(split_levels(msg.topic)[1]);
    return on_delta(location, decode_delta(msg.payload), origin.device_id);
  });
}

void BrokerService::sync_locations() {
  for (const auto& rec : whitelist_.devices()) {
    if (!rec.location_id.empty()) store_->add_location(rec.location_id);
  }
}

std::vector<Outgoing> BrokerService::config_messages(const DeviceRecord& rec) const {
  std::vector<Outgoing> out;
  out.push_back({{config_topic(rec.device_id, "type"), json{{"device_type", rec.device_type}}.dump(), 1}, true});
  out.push_back({{config_topic(rec.device_id, "location"),
                  json{{"location_id", rec.location_id}, {"name", rec.location_name}}.dump(), 1},
                 true});
  out.push_back({{config_topic(rec.device_id, "constants"), rec.constants.dump(), 1}, true});
  return out;
}

std::vector<Outgoing> BrokerService::on_delta(const std::string& location_id, const DeltaPayload& delta,
                                              const std::string& device_id) {
  const auto rec = whitelist_.device(device_id);
  if (!rec || rec->location_id != location_id) {
    spdlog::warn("delta for {} from {} which is not associated with it; dropped", location_id, device_id);
    return {};
  }
  const ApplyResult r = store_->apply(location_id, delta.sensor_id, delta.event_seq, delta.direction,
                                      delta.timestamp_ms);
  switch (r.status) {
    case ApplyResult::Status::UnknownLocation:
      spdlog::warn("delta for unknown location {} dropped", location_id);
      return {};
    case ApplyResult::Status::Duplicate:
      return {};
    case ApplyResult::Status::Applied:
      break;
  }
  if (r.underflow) {
    spdlog::warn("occupancy underflow at {} (sensor {} seq {})", location_id, delta.sensor_id, delta.event_seq);
  }
  OccupancyPayload o{location_id, r.state.occupancy, r.state.as_of_ms};
  return {Outgoing{{occupancy_topic(location_id), encode_occupancy(o), 1}, false}};
}

void BrokerService::publish_device_config(const std::string& device_id) {
  const auto rec = whitelist_.device(device_id);
  if (!rec) throw InputError("unknown device " + device_id);
  if (!rec->location_id.empty()) store_->add_location(rec->location_id);
  for (const auto& out : config_messages(*rec)) core_.publish(out.message, out.retain);
}

std::string BrokerService::rotate_key(const std::string& device_id) {
  const std::string key = whitelist_.rotate(device_id, clock_.now_ms());
  save_whitelist();
  core_.publish({key_topic(device_id), json{{"device_key", key}}.dump(), 1}, true);
  spdlog::info("rotated key for {}", device_id);
  return key;
}

void BrokerService::save_whitelist() const {
  saved_version_ = whitelist_.version();
  whitelist_.save(options_.whitelist_path);
}

void BrokerService::tick() {
  core_.tick();
  if (whitelist_.version() != saved_version_) save_whitelist();
  store_->maybe_snapshot(clock_.now_ms(), options_.snapshot_interval_ms);
}

}  // namespace flowmon::broker
