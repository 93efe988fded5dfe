#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "flowmon/broker/client.hpp"
#include "flowmon/common/clock.hpp"

namespace flowmon::coordinator {

struct DeviceConfig {
  std::string device_id;
  std::string device_key;
  std::string device_type;
  std::string location_id;
  std::string location_name;
  nlohmann::json constants = nlohmann::json::object();

  /// Segmentation threshold from the setup constants, default 1.5 C.
  double delta_threshold() const;
  bool operator==(const DeviceConfig&) const = default;
};

/// Collects the three provisioning callbacks (type, location, constants) in
/// any order. Later messages for a part replace earlier ones.
class ConfigAssembler {
 public:
  ConfigAssembler(std::string device_id, std::string device_key);

  /// Consumes a config message; returns false if `topic` is not one of
  /// this device's config topics. Throws InputError on a malformed payload.
  bool apply(const std::string& topic, const std::string& payload);
  bool complete() const { return have_type_ && have_location_ && have_constants_; }
  /// Only meaningful once complete().
  const DeviceConfig& config() const { return config_; }
  void set_key(const std::string& key) { config_.device_key = key; }

 private:
  DeviceConfig config_;
  bool have_type_ = false;
  bool have_location_ = false;
  bool have_constants_ = false;
};

inline constexpr std::int64_t kProvisionTimeoutMs = 10'000;
inline constexpr std::int64_t kProvisionMaxBackoffMs = 30'000;

/// Hello/three-callback handshake over a BrokerClient. An attempt that does
/// not complete within 10 s is retried after 1, 2, 4, ... (capped 30) s. An
/// authentication rejection is terminal.
class Provisioner {
 public:
  enum class Status { Idle, InProgress, Done, Rejected };

  Provisioner(broker::BrokerClient& client, const Clock& clock, std::string device_id, std::string device_key);

  void start();
  void tick();
  /// Routes a message; returns true if it was a config message.
  bool on_message(const std::string& topic, const std::string& payload);

  Status status() const;
  std::optional<DeviceConfig> config() const;
  int attempts() const { return attempts_; }
  ConfigAssembler& assembler() { return assembler_; }

 private:
  void attempt();

  broker::BrokerClient& client_;
  const Clock& clock_;
  std::string device_id_;
  ConfigAssembler assembler_;
  bool started_ = false;
  int attempts_ = 0;
  std::int64_t attempt_started_ms_ = 0;
  std::int64_t retry_at_ms_ = -1;
  std::int64_t backoff_ms_ = 0;
};

}  // namespace flowmon::coordinator
