#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "flowmon/broker/client.hpp"
#include "flowmon/common/clock.hpp"
#include "flowmon/coordinator/ledger.hpp"
#include "flowmon/coordinator/provisioning.hpp"
#include "flowmon/coordinator/publisher.hpp"
#include "flowmon/flow/flow_meter.hpp"

namespace flowmon::coordinator {

struct SensorSettings {
  std::string sensor_id;
  std::string coverage;
};

/// Device config file: {"device_id", "device_key", "broker": "host:port",
/// "sensors": [{"sensor_id", "coverage"}]}.
struct DeviceSettings {
  std::string device_id;
  std::string device_key;
  std::string broker;
  std::vector<SensorSettings> sensors;
};

DeviceSettings load_device_settings(const std::string& path);  // throws ConfigError
void save_device_settings(const std::string& path, const DeviceSettings& s);

/// Sensor id used when the config lists no sensors.
std::string default_sensor_id(const std::string& device_id);

/// One coordinator device: provisions itself, runs a FlowMeter per sensor,
/// folds their events into the ledger and publishes deltas. Input from the
/// broker client is parked in an inbox and handled by tick(), so all device
/// state lives on the caller's thread.
class Device {
 public:
  Device(std::shared_ptr<broker::ClientTransport> transport, const Clock& clock, DeviceSettings settings,
         std::uint64_t first_event_seq = 1);

  void start();
  /// Drives the client, provisioning retries and publication.
  void tick();

  bool provisioned() const;
  /// Throws AuthError once the broker has rejected our credentials.
  void check_rejected() const;
  std::optional<DeviceConfig> config() const { return provisioner_.config(); }

  /// Runs a frame through its sensor's FlowMeter; frames arriving before
  /// provisioning completes are dropped. Returns the accepted updates.
  std::vector<DeltaUpdate> on_frame(const thermal::ThermalFrame& frame);

  /// Called with the new settings after a key rotation was applied.
  void on_key_rotated(std::function<void(const DeviceSettings&)> h) { on_key_rotated_ = std::move(h); }

  /// Latest occupancy pushed for our location, if any.
  std::optional<std::int64_t> last_occupancy() const { return last_occupancy_; }

  broker::BrokerClient& client() { return *client_; }
  const SensorLedger& ledger() const { return ledger_; }
  const DeltaQueue& queue() const { return queue_; }
  const DeltaPublisher& publisher() const { return publisher_; }
  const DeviceSettings& settings() const { return settings_; }
  const flow::FlowMeter* meter(const std::string& sensor_id) const;
  std::uint64_t frames_before_provisioning() const { return early_frames_; }

 private:
  void handle_message(const std::string& topic, const std::string& payload);
  void ensure_meters();

  struct Inbound {
    std::string topic;
    std::string payload;
    std::uint32_t ack_mid = 0;
  };

  const Clock& clock_;
  DeviceSettings settings_;
  std::uint64_t first_event_seq_;
  std::unique_ptr<broker::BrokerClient> client_;
  Provisioner provisioner_;
  SensorLedger ledger_;
  DeltaQueue queue_;
  DeltaPublisher publisher_;
  std::map<std::string, flow::FlowMeter> meters_;
  std::string occupancy_filter_;
  std::optional<std::int64_t> last_occupancy_;
  std::uint64_t early_frames_ = 0;
  std::mutex inbox_mu_;
  std::vector<Inbound> inbox_;
  std::function<void(const DeviceSettings&)> on_key_rotated_;
};

}  // namespace flowmon::coordinator
