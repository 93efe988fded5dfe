#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "flowmon/broker/service.hpp"
#include "flowmon/broker/transport.hpp"
#include "flowmon/common/clock.hpp"
#include "flowmon/coordinator/device.hpp"
#include "flowmon/registry/registry.hpp"
#include "flowmon/thermal/frame.hpp"

namespace flowmon::harness {

struct StackOptions {
  std::string state_dir;  // empty: nothing touches the disk
  std::int64_t start_ms = 1'760'000'000'000;
  std::uint32_t pbkdf2_iterations = 1'000;
  std::int64_t snapshot_interval_ms = 60'000;
};

/// Broker + registry in one process on a shared ManualClock. With a
/// state_dir, the whitelist, occupancy journal and registry state live
/// there, so a second LocalStack on the same directory is a restart.
class LocalStack {
 public:
  explicit LocalStack(StackOptions options = {});

  ManualClock& clock() { return clock_; }
  broker::BrokerService& broker() { return *broker_; }
  registry::Registry& registry() { return *registry_; }

  /// Token of the business owner account, created on first use.
  std::string owner_token();
  /// New activity at a stub-table address; returns its id.
  std::string create_activity(const std::string& name, const std::string& address = "museo test, via prova 1");
  /// Adds a whitelisted device and returns its key.
  std::string register_device(const std::string& device_id);
  /// OTP round trip binding the device to the activity.
  void associate(const std::string& device_id, const std::string& activity_id);

  std::string whitelist_path() const;
  std::string journal_path() const;
  std::string registry_path() const;

 private:
  StackOptions options_;
  ManualClock clock_;
  std::unique_ptr<broker::BrokerService> broker_;
  std::unique_ptr<registry::Registry> registry_;
  std::string owner_token_;
};

inline constexpr const char* kOwnerEmail = "owner@museum.example";
inline constexpr const char* kOwnerPassword = "correct horse battery";

/// A coordinator device attached to a LocalStack over a MemoryLink. Every
/// step() pumps the link and ticks both sides on the caller's thread.
class LocalDevice {
 public:
  LocalDevice(LocalStack& stack, coordinator::DeviceSettings settings, broker::LinkFaults faults = {},
              std::uint64_t first_event_seq = 1);

  void step();
  /// Runs step() in 100 ms clock increments until provisioned. Returns false
  /// if `max_ms` elapses first.
  bool provision(std::int64_t max_ms = 120'000);
  /// Sets the clock to the frame time and feeds it.
  std::vector<coordinator::DeltaUpdate> feed(const thermal::ThermalFrame& frame);
  /// Steps until every queued delta is acknowledged. False on timeout.
  bool settle(std::int64_t max_ms = 600'000);

  coordinator::Device& device() { return *device_; }
  broker::MemoryLink& link() { return *link_; }

 private:
  LocalStack& stack_;
  std::shared_ptr<broker::MemoryLink> link_;
  std::unique_ptr<coordinator::Device> device_;
};

}  // namespace flowmon::harness
