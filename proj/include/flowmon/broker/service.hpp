#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "flowmon/broker/core.hpp"
#include "flowmon/broker/occupancy.hpp"
#include "flowmon/broker/whitelist.hpp"
#include "flowmon/common/clock.hpp"

namespace flowmon::broker {

// Topic layout.
std::string hello_topic(const std::string& device_id);
std::string config_topic(const std::string& device_id, const std::string& part);  // type|location|constants
std::string key_topic(const std::string& device_id);
std::string delta_topic(const std::string& location_id);
std::string occupancy_topic(const std::string& location_id);
inline constexpr const char* kRegistryUpdatesTopic = "registry/updates";

/// Payload of `locations/{id}/delta`. (sensor_id, event_seq) is the
/// end-to-end event id.
struct DeltaPayload {
  std::string sensor_id;
  std::uint64_t event_seq = 0;
  int direction = 0;
  std::int64_t timestamp_ms = 0;
};
std::string encode_delta(const DeltaPayload& d);
DeltaPayload decode_delta(const std::string& payload);  // throws InputError

struct OccupancyPayload {
  std::string location_id;
  std::int64_t occupancy = 0;
  std::int64_t timestamp_ms = 0;
};
std::string encode_occupancy(const OccupancyPayload& o);
OccupancyPayload decode_occupancy(const std::string& payload);

struct BrokerOptions {
  std::string whitelist_path;  // rewritten after key rotations when set
  std::string journal_path;    // empty: in-memory occupancy only
  std::int64_t snapshot_interval_ms = 60'000;
};

/// Broker plus its server-side actions:
///   devices/+/hello   -> publish retained type/location/constants config
///   locations/+/delta -> apply to occupancy, publish locations/{id}/occupancy
class BrokerService {
 public:
  BrokerService(const Clock& clock, BrokerOptions options = {});

  Whitelist& whitelist() { return whitelist_; }
  OccupancyStore& occupancy() { return *store_; }
  BrokerCore& core() { return core_; }
  const Clock& clock() const { return clock_; }

  /// Registers every location referenced by the whitelist.
  void sync_locations();

  /// Publishes the retained config messages for `device_id`.
  void publish_device_config(const std::string& device_id);

  /// New key for the device, published retained on devices/{id}/key.
  std::string rotate_key(const std::string& device_id);

  void save_whitelist() const;

  void tick();

  /// Applies one delta on behalf of `device_id`; used by the interceptor.
  std::vector<Outgoing> on_delta(const std::string& location_id, const DeltaPayload& delta,
                                 const std::string& device_id);

 private:
  std::vector<Outgoing> config_messages(const DeviceRecord& rec) const;

  const Clock& clock_;
  BrokerOptions options_;
  Whitelist whitelist_;
  std::unique_ptr<OccupancyStore> store_;
  BrokerCore core_;
  mutable std::uint64_t saved_version_ = 0;
};

}  // namespace flowmon::broker
