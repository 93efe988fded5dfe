#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace flowmon::broker {

inline constexpr std::int64_t kRotationGraceMs = 60'000;
inline constexpr std::size_t kKeyHexLength = 32;  // 128-bit keys

struct DeviceRecord {
  std::string device_id;
  std::string device_type = "flow-meter";
  std::string location_id;    // empty until associated
  std::string location_name;
  nlohmann::json constants = nlohmann::json::object();
  std::vector<std::string> keys;  // keys that currently authenticate

  bool operator==(const DeviceRecord&) const = default;
};

struct PendingRotation {
  std::string old_key;
  std::string new_key;
  std::int64_t deadline_ms = 0;
};

/// Provisioned devices and their keys. Keys are stored lowercase. A key
/// that has been revoked never authenticates again. Thread-safe.
///
/// File format (JSON):
///   {"devices": [{"device_id", "key" | "keys", "device_type", "location_id",
///                 "location_name", "constants"}], "revoked": [...],
///    "pending": [{"device_id", "old_key", "new_key", "deadline_ms"}]}
class Whitelist {
 public:
  Whitelist() = default;

  Whitelist(const Whitelist&) = delete;
  Whitelist& operator=(const Whitelist&) = delete;

  /// Adds the contents of a whitelist file. Throws ConfigError.
  void load(const std::string& path);
  void load_json(const nlohmann::json& j);
  /// Writes to `path` atomically; no-op for an empty path.
  void save(const std::string& path) const;

  nlohmann::json to_json() const;

  /// Throws ConfigError on malformed keys or duplicates.
  void add_device(DeviceRecord record);

  /// device_id bound to an active key, if any.
  std::optional<std::string> authenticate(const std::string& key) const;
  bool is_revoked(const std::string& key) const;

  std::optional<DeviceRecord> device(const std::string& device_id) const;
  std::vector<DeviceRecord> devices() const;
  bool has_device(const std::string& device_id) const;

  void set_location(const std::string& device_id, const std::string& location_id,
                    const std::string& location_name);

  void revoke(const std::string& key);

  /// Adds a fresh key for `device_id`; the old key keeps working until the
  /// device connects with the new one or `grace_ms` elapses.
  /// Throws InputError for an unknown device.
  std::string rotate(const std::string& device_id, std::int64_t now_ms, std::int64_t grace_ms = kRotationGraceMs);

  /// Called when a device authenticates with `key`; completes a pending
  /// rotation early. Returns the old keys revoked as a result.
  std::vector<std::string> confirm_key(const std::string& device_id, const std::string& key);

  /// Revokes old keys whose grace period has ended; returns them.
  std::vector<std::string> expire(std::int64_t now_ms);

  std::optional<PendingRotation> pending(const std::string& device_id) const;

  /// Incremented by every mutation; lets owners persist only on change.
  std::uint64_t version() const;

 private:
  void revoke_locked(const std::string& key);

  mutable std::mutex mu_;
  std::map<std::string, DeviceRecord> devices_;
  std::map<std::string, std::string> key_owner_;
  std::set<std::string> revoked_;
  std::map<std::string, PendingRotation> pending_;
  std::uint64_t version_ = 0;
};

std::string normalize_key(const std::string& key);

}  // namespace flowmon::broker
