#include "flowmon/coordinator/provisioning.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "flowmon/broker/service.hpp"
#include "flowmon/common/errors.hpp"
#include "flowmon/thermal/segmentation.hpp"

namespace flowmon::coordinator {

using nlohmann::json;

double DeviceConfig::delta_threshold() const {
  const auto it = constants.find("delta_threshold");
  if (it == constants.end() || !it->is_number()) return thermal::kDefaultDeltaThresholdC;
  return it->get<double>();
}

ConfigAssembler::ConfigAssembler(std::string device_id, std::string device_key) {
  config_.device_id = std::move(device_id);
  config_.device_key = std::move(device_key);
}

bool ConfigAssembler::apply(const std::string& topic, const std::string& payload) {
  const auto& id = config_.device_id;
  try {
    if (topic == broker::config_topic(id, "type")) {
      config_.device_type = json::parse(payload).at("device_type").get<std::string>();
      have_type_ = true;
      return true;
    }
    if (topic == broker::config_topic(id, "location")) {
      const json j = json::parse(payload);
      config_.location_id = j.at("location_id").get<std::string>();
      config_.location_name = j.value("name", std::string{});
      have_location_ = true;
      return true;
    }
    if (topic == broker::config_topic(id, "constants")) {
      json j = json::parse(payload);
      if (!j.is_object()) throw InputError("constants must be an object");
      config_.constants = std::move(j);
      have_constants_ = true;
      return true;
    }
  } catch (const json::exception& e) {
    throw InputError("bad config payload on " + topic + ": " + e.what());
  }
  return false;
}

Provisioner::Provisioner(broker::BrokerClient& client, const Clock& clock, std::string device_id,
                         std::string device_key)
    : client_(client), clock_(clock), device_id_(device_id), assembler_(std::move(device_id), std::move(device_key)) {}

void Provisioner::start() {
  if (started_) return;
  started_ = true;
  for (const char* part : {"type", "location", "constants"}) {
    client_.subscribe(broker::config_topic(device_id_, part));
  }
  client_.connect();
  attempt();
}

void Provisioner::attempt() {
  ++attempts_;
  attempt_started_ms_ = clock_.now_ms();
  retry_at_ms_ = -1;
  if (client_.state() == broker::BrokerClient::State::Idle) client_.connect();
  client_.publish(broker::hello_topic(device_id_), json{{"device_id", device_id_}}.dump(), 1);
}

void Provisioner::tick() {
  if (!started_ || status() != Status::InProgress) return;
  const std::int64_t now = clock_.now_ms();
  if (retry_at_ms_ >= 0) {
    if (now >= retry_at_ms_) attempt();
    return;
  }
  if (now - attempt_started_ms_ >= kProvisionTimeoutMs) {
    backoff_ms_ = backoff_ms_ == 0 ? 1'000 : std::min(backoff_ms_ * 2, kProvisionMaxBackoffMs);
    retry_at_ms_ = now + backoff_ms_;
    spdlog::info("{}: provisioning attempt {} timed out, retrying in {} ms", device_id_, attempts_, backoff_ms_);
  }
}

bool Provisioner::on_message(const std::string& topic, const std::string& payload) {
  try {
    return assembler_.apply(topic, payload);
  } catch (const InputError& e) {
    spdlog::warn("{}: {}", device_id_, e.what());
    return true;
  }
}

Provisioner::Status Provisioner::status() const {
  if (!started_) return Status::Idle;
  if (assembler_.complete()) return Status::Done;
  if (client_.state() == broker::BrokerClient::State::Rejected) return Status::Rejected;
  return Status::InProgress;
}

std::optional<DeviceConfig> Provisioner::config() const {
  if (!assembler_.complete()) return std::nullopt;
  return assembler_.config();
}

}  // namespace flowmon::coordinator
