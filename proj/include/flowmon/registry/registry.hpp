#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowmon/broker/occupancy.hpp"
#include "flowmon/broker/service.hpp"
#include "flowmon/common/clock.hpp"
#include "flowmon/registry/geo.hpp"

namespace flowmon::registry {

/// Failure carrying the HTTP status it maps to.
class ApiError : public std::runtime_error {
 public:
  enum Code { BadRequest = 400, Unauthorized = 401, Forbidden = 403, NotFound = 404, Conflict = 409 };
  ApiError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

enum class Role { Standard, Business };
std::string to_string(Role r);

struct PasswordHash {
  std::string algorithm = "pbkdf2-sha256";
  std::uint32_t iterations = 0;
  std::string salt_hex;
  std::string hash_hex;
  bool operator==(const PasswordHash&) const = default;
};

PasswordHash hash_password(const std::string& password, std::uint32_t iterations);
bool verify_password(const std::string& password, const PasswordHash& h);

struct User {
  std::string user_id;
  std::string email;
  PasswordHash password;
  Role role = Role::Standard;
  bool operator==(const User&) const = default;
};

struct Visibility {
  bool listed = true;     // appears in nearby results and public queries
  bool occupancy = true;
  bool capacity = true;
  bool address = true;
  bool operator==(const Visibility&) const = default;
};

struct Activity {
  std::string activity_id;  // doubles as the broker location_id
  std::string owner_id;
  std::string name;
  std::string address;
  GeoPoint geo;
  std::int64_t capacity = 0;
  Visibility visibility;
  std::set<std::string> device_ids;
  bool operator==(const Activity&) const = default;
};

struct OtpGrant {
  std::string otp;
  std::string activity_id;
  std::int64_t issued_ms = 0;
  bool used = false;
  bool operator==(const OtpGrant&) const = default;
};

struct Session {
  std::string user_id;
  Role role = Role::Standard;
  std::int64_t issued_ms = 0;
};

struct OccupancyView {
  std::string activity_id;
  std::int64_t occupancy = 0;
  std::optional<std::int64_t> capacity;
  std::int64_t as_of_ms = 0;
};

struct NearbyEntry {
  double distance_m = 0.0;
  nlohmann::json activity;  // public fields only
};

inline constexpr std::int64_t kTokenTtlMs = 24LL * 3600 * 1000;
inline constexpr std::int64_t kOtpTtlMs = 300'000;
inline constexpr double kMaxNearbyRadiusM = 100'000.0;
inline constexpr std::uint32_t kDefaultPbkdf2Iterations = 100'000;

struct RegistryOptions {
  std::string state_path;  // empty: in-memory only
  std::set<std::string> business_emails;
  std::uint32_t pbkdf2_iterations = kDefaultPbkdf2Iterations;
};

/// Users, activities and device association on top of a BrokerService.
/// Every create, update, associate or dissociate publishes exactly one
/// `registry/updates` message. State mutations are serialized by one
/// mutex; token checks take a shared lock on the session table.
class Registry {
 public:
  Registry(broker::BrokerService& broker, Geocoder geocoder, RegistryOptions options = {});

  std::string register_user(const std::string& email, const std::string& password);
  /// Returns a fresh 128-bit token.
  std::string login(const std::string& email, const std::string& password);
  /// Administrative role change.
  void set_role(const std::string& email, Role role);

  /// Throws Unauthorized for unknown or expired tokens.
  Session authenticate(const std::string& token) const;

  Activity create_activity(const std::string& token, const std::string& name, const std::string& address,
                           std::int64_t capacity, std::optional<Visibility> visibility = {});
  /// Accepts any of name, address, capacity, visibility{...}.
  Activity update_activity(const std::string& token, const std::string& activity_id, const nlohmann::json& patch);
  std::vector<Activity> my_activities(const std::string& token) const;

  OtpGrant issue_otp(const std::string& token, const std::string& activity_id);
  /// Binds `device_id` to the OTP's activity. The caller must own it.
  Activity associate_device(const std::string& token, const std::string& device_id, const std::string& otp);
  void dissociate_device(const std::string& token, const std::string& device_id);

  /// `token` may be empty. Hidden activities are NotFound for non-owners.
  OccupancyView query_occupancy(const std::string& activity_id, const std::string& token = {}) const;
  std::vector<broker::HistoryPoint> query_history(const std::string& token, const std::string& activity_id,
                                                  std::int64_t from_ms, std::int64_t to_ms) const;
  std::vector<NearbyEntry> list_nearby(double lat, double lon, double radius_m) const;
  /// Public view of one activity, or the full record for its owner.
  nlohmann::json activity_view(const std::string& activity_id, const std::string& token = {}) const;

  std::optional<Activity> activity(const std::string& activity_id) const;
  std::optional<User> user_by_email(const std::string& email) const;

  /// Canonical text of users, activities and grants.
  std::string dump() const;
  nlohmann::json to_json() const;

  std::uint64_t notifications() const { return notifications_.load(); }

 private:
  Session require_business(const std::string& token) const;
  Activity& owned_locked(const Session& s, const std::string& activity_id);
  void notify(const std::string& kind, const nlohmann::json& body);
  void persist_locked() const;
  void load();
  std::string next_id_locked(const char* prefix);

  broker::BrokerService& broker_;
  Geocoder geocoder_;
  RegistryOptions options_;
  PasswordHash dummy_hash_;

  mutable std::mutex mu_;
  std::map<std::string, User> users_;  // by email
  std::map<std::string, Activity> activities_;
  std::map<std::string, OtpGrant> otps_;
  std::uint64_t next_id_ = 1;

  mutable std::shared_mutex session_mu_;
  std::map<std::string, Session> sessions_;

  std::atomic<std::uint64_t> notifications_{0};
};

/// Applies boolean flags from `j` over `base`; throws BadRequest.
Visibility visibility_from_json(const nlohmann::json& j, Visibility base = {});

nlohmann::json public_json(const Activity& a);
nlohmann::json owner_json(const Activity& a);

}  // namespace flowmon::registry
