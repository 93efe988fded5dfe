#include "flowmon/registry/registry.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <limits>
#include <regex>

#include <spdlog/spdlog.h>

#include "flowmon/common/errors.hpp"
#include "flowmon/common/random.hpp"

namespace flowmon::registry {

using nlohmann::json;

namespace {

std::string to_hex(const unsigned char* p, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[p[i] >> 4]);
    out.push_back(digits[p[i] & 15]);
  }
  return out;
}

std::string pbkdf2(const std::string& password, const std::string& salt, std::uint32_t iterations) {
  unsigned char out[32];
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()),
                        reinterpret_cast<const unsigned char*>(salt.data()), static_cast<int>(salt.size()),
                        static_cast<int>(iterations), EVP_sha256(), sizeof out, out) != 1) {
    throw std::runtime_error("PBKDF2 failed");
  }
  return to_hex(out, sizeof out);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool valid_email(const std::string& email) {
  static const std::regex re(R"(^[^@\s]+@[^@\s]+\.[^@\s]+$)");
  return email.size() <= 254 && std::regex_match(email, re);
}

json visibility_json(const Visibility& v) {
  return {{"listed", v.listed}, {"occupancy", v.occupancy}, {"capacity", v.capacity}, {"address", v.address}};
}

}  // namespace

Visibility visibility_from_json(const json& j, Visibility v) {
  if (!j.is_object()) throw ApiError(ApiError::BadRequest, "visibility must be an object");
  for (const auto& [k, val] : j.items()) {
    if (!val.is_boolean()) throw ApiError(ApiError::BadRequest, "visibility." + k + " must be boolean");
    const bool b = val.get<bool>();
    if (k == "listed") v.listed = b;
    else if (k == "occupancy") v.occupancy = b;
    else if (k == "capacity") v.capacity = b;
    else if (k == "address") v.address = b;
    else throw ApiError(ApiError::BadRequest, "unknown visibility flag " + k);
  }
  return v;
}

namespace {

bool expired(std::int64_t issued_ms, std::int64_t now_ms, std::int64_t ttl_ms) { return now_ms - issued_ms >= ttl_ms; }

}  // namespace

std::string to_string(Role r) { return r == Role::Business ? "business" : "standard"; }

PasswordHash hash_password(const std::string& password, std::uint32_t iterations) {
  PasswordHash h;
  h.iterations = iterations;
  h.salt_hex = random_hex(16);
  h.hash_hex = pbkdf2(password, h.salt_hex, iterations);
  return h;
}

bool verify_password(const std::string& password, const PasswordHash& h) {
  const std::string got = pbkdf2(password, h.salt_hex, h.iterations);
  return got.size() == h.hash_hex.size() && CRYPTO_memcmp(got.data(), h.hash_hex.data(), got.size()) == 0;
}

json public_json(const Activity& a) {
  json j{{"activity_id", a.activity_id}, {"name", a.name}, {"lat", a.geo.lat}, {"lon", a.geo.lon},
         {"occupancy_public", a.visibility.occupancy}};
  if (a.visibility.address) j["address"] = a.address;
  if (a.visibility.capacity) j["capacity"] = a.capacity;
  return j;
}

json owner_json(const Activity& a) {
  return {{"activity_id", a.activity_id}, {"owner_id", a.owner_id},     {"name", a.name},
          {"address", a.address},         {"lat", a.geo.lat},           {"lon", a.geo.lon},
          {"capacity", a.capacity},       {"visibility", visibility_json(a.visibility)},
          {"device_ids", a.device_ids}};
}

Registry::Registry(broker::BrokerService& broker, Geocoder geocoder, RegistryOptions options)
    : broker_(broker), geocoder_(std::move(geocoder)), options_(std::move(options)) {
  std::set<std::string> emails;
  for (const auto& e : options_.business_emails) emails.insert(lower(e));
  options_.business_emails = std::move(emails);
  dummy_hash_ = hash_password("not-a-real-password", options_.pbkdf2_iterations);
  load();
}

std::string Registry::next_id_locked(const char* prefix) { return prefix + std::to_string(next_id_++); }

std::string Registry::register_user(const std::string& email_in, const std::string& password) {
  const std::string email = lower(email_in);
  if (!valid_email(email)) throw ApiError(ApiError::BadRequest, "invalid email");
  if (password.size() < 8) throw ApiError(ApiError::BadRequest, "password must be at least 8 characters");
  PasswordHash h = hash_password(password, options_.pbkdf2_iterations);
  std::lock_guard lock(mu_);
  if (users_.count(email)) throw ApiError(ApiError::Conflict, "email already registered");
  User u{next_id_locked("u"), email, std::move(h),
         options_.business_emails.count(email) ? Role::Business : Role::Standard};
  users_.emplace(email, u);
  persist_locked();
  return u.user_id;
}

std::string Registry::login(const std::string& email_in, const std::string& password) {
  const std::string email = lower(email_in);
  std::optional<User> u;
  {
    std::lock_guard lock(mu_);
    const auto it = users_.find(email);
    if (it != users_.end()) u = it->second;
  }
  // Unknown emails still pay for one hash so both failures take as long.
  const bool ok = verify_password(password, u ? u->password : dummy_hash_) && u.has_value();
  if (!ok) throw ApiError(ApiError::Unauthorized, "bad credentials");
  const std::string token = random_hex(16);
  std::unique_lock lock(session_mu_);
  sessions_[token] = Session{u->user_id, u->role, broker_.clock().now_ms()};
  return token;
}

void Registry::set_role(const std::string& email_in, Role role) {
  const std::string email = lower(email_in);
  std::string user_id;
  {
    std::lock_guard lock(mu_);
    const auto it = users_.find(email);
    if (it == users_.end()) throw ApiError(ApiError::NotFound, "no such user");
    it->second.role = role;
    user_id = it->second.user_id;
    persist_locked();
  }
  std::unique_lock lock(session_mu_);
  for (auto& [token, s] : sessions_) {
    if (s.user_id == user_id) s.role = role;
  }
}

Session Registry::authenticate(const std::string& token) const {
  if (token.empty()) throw ApiError(ApiError::Unauthorized, "missing token");
  std::shared_lock lock(session_mu_);
  const auto it = sessions_.find(token);
  if (it == sessions_.end()) throw ApiError(ApiError::Unauthorized, "unknown token");
  if (expired(it->second.issued_ms, broker_.clock().now_ms(), kTokenTtlMs)) {
    throw ApiError(ApiError::Unauthorized, "token expired");
  }
  return it->second;
}

Session Registry::require_business(const std::string& token) const {
  Session s = authenticate(token);
  if (s.role != Role::Business) throw ApiError(ApiError::Forbidden, "business role required");
  return s;
}

Activity& Registry::owned_locked(const Session& s, const std::string& activity_id) {
  const auto it = activities_.find(activity_id);
  if (it == activities_.end() || it->second.owner_id != s.user_id) {
    throw ApiError(ApiError::NotFound, "no such activity");
  }
  return it->second;
}

void Registry::notify(const std::string& kind, const json& body) {
  json msg = body;
  msg["kind"] = kind;
  broker_.core().publish({broker::kRegistryUpdatesTopic, msg.dump(), 1}, false);
  ++notifications_;
}

Activity Registry::create_activity(const std::string& token, const std::string& name, const std::string& address,
                                   std::int64_t capacity, std::optional<Visibility> visibility) {
  const Session s = require_business(token);
  if (name.empty()) throw ApiError(ApiError::BadRequest, "name is required");
  if (capacity <= 0) throw ApiError(ApiError::BadRequest, "capacity must be positive");
  const auto geo = geocoder_(address);
  if (!geo || !valid_geo(*geo)) throw ApiError(ApiError::BadRequest, "cannot resolve address '" + address + "'");

  std::lock_guard lock(mu_);
  Activity a;
  a.activity_id = next_id_locked("act-");
  a.owner_id = s.user_id;
  a.name = name;
  a.address = address;
  a.geo = *geo;
  a.capacity = capacity;
  if (visibility) a.visibility = *visibility;
  activities_.emplace(a.activity_id, a);
  broker_.occupancy().add_location(a.activity_id);
  persist_locked();
  notify("activity_created", public_json(a));
  return a;
}

Activity Registry::update_activity(const std::string& token, const std::string& activity_id, const json& patch) {
  const Session s = require_business(token);
  if (!patch.is_object() || patch.empty()) throw ApiError(ApiError::BadRequest, "patch must be a non-empty object");
  std::lock_guard lock(mu_);
  Activity next = owned_locked(s, activity_id);
  try {
    for (const auto& [k, v] : patch.items()) {
      if (k == "name") {
        next.name = v.get<std::string>();
        if (next.name.empty()) throw ApiError(ApiError::BadRequest, "name is required");
      } else if (k == "address") {
        next.address = v.get<std::string>();
        const auto geo = geocoder_(next.address);
        if (!geo || !valid_geo(*geo)) throw ApiError(ApiError::BadRequest, "cannot resolve address");
        next.geo = *geo;
      } else if (k == "capacity") {
        next.capacity = v.get<std::int64_t>();
        if (next.capacity <= 0) throw ApiError(ApiError::BadRequest, "capacity must be positive");
      } else if (k == "visibility") {
        next.visibility = visibility_from_json(v, next.visibility);
      } else {
        throw ApiError(ApiError::BadRequest, "unknown field " + k);
      }
    }
  } catch (const json::exception& e) {
    throw ApiError(ApiError::BadRequest, std::string("bad patch: ") + e.what());
  }
  const bool renamed = next.name != activities_[activity_id].name;
  activities_[activity_id] = next;
  if (renamed) {
    // Devices carry the activity name in their config.
    for (const auto& d : next.device_ids) {
      broker_.whitelist().set_location(d, next.activity_id, next.name);
      broker_.publish_device_config(d);
    }
    broker_.save_whitelist();
  }
  persist_locked();
  notify("activity_updated", public_json(next));
  return next;
}

std::vector<Activity> Registry::my_activities(const std::string& token) const {
  const Session s = require_business(token);
  std::lock_guard lock(mu_);
  std::vector<Activity> out;
  for (const auto& [id, a] : activities_) {
    if (a.owner_id == s.user_id) out.push_back(a);
  }
  return out;
}

OtpGrant Registry::issue_otp(const std::string& token, const std::string& activity_id) {
  const Session s = require_business(token);
  std::lock_guard lock(mu_);
  owned_locked(s, activity_id);
  const std::int64_t now = broker_.clock().now_ms();
  std::erase_if(otps_, [&](const auto& kv) { return kv.second.used || expired(kv.second.issued_ms, now, kOtpTtlMs); });
  std::string code;
  do {
    code = std::to_string(random_below(1'000'000));
    code.insert(0, 6 - code.size(), '0');
  } while (otps_.count(code));
  OtpGrant g{code, activity_id, now, false};
  otps_.emplace(code, g);
  persist_locked();
  return g;
}

Activity Registry::associate_device(const std::string& token, const std::string& device_id, const std::string& otp) {
  const Session s = require_business(token);
  std::lock_guard lock(mu_);
  const auto it = otps_.find(otp);
  if (it == otps_.end()) throw ApiError(ApiError::Unauthorized, "unknown otp");
  OtpGrant& g = it->second;
  if (g.used) throw ApiError(ApiError::Unauthorized, "otp already used");
  if (expired(g.issued_ms, broker_.clock().now_ms(), kOtpTtlMs)) throw ApiError(ApiError::Unauthorized, "otp expired");
  Activity& a = owned_locked(s, g.activity_id);
  const auto rec = broker_.whitelist().device(device_id);
  if (!rec) throw ApiError(ApiError::NotFound, "device not registered");
  if (!rec->location_id.empty()) {
    throw ApiError(ApiError::Conflict, "device already associated with " + rec->location_id);
  }
  g.used = true;
  a.device_ids.insert(device_id);
  broker_.whitelist().set_location(device_id, a.activity_id, a.name);
  broker_.publish_device_config(device_id);
  broker_.save_whitelist();
  persist_locked();
  notify("device_associated", {{"activity_id", a.activity_id}, {"device_id", device_id}});
  spdlog::info("device {} associated with {} ({})", device_id, a.activity_id, a.name);
  return a;
}

void Registry::dissociate_device(const std::string& token, const std::string& device_id) {
  const Session s = require_business(token);
  std::lock_guard lock(mu_);
  for (auto& [id, a] : activities_) {
    if (a.owner_id != s.user_id || !a.device_ids.count(device_id)) continue;
    a.device_ids.erase(device_id);
    broker_.whitelist().set_location(device_id, "", "");
    broker_.publish_device_config(device_id);
    broker_.save_whitelist();
    persist_locked();
    notify("device_dissociated", {{"activity_id", a.activity_id}, {"device_id", device_id}});
    return;
  }
  throw ApiError(ApiError::NotFound, "device not associated with any of your activities");
}

OccupancyView Registry::query_occupancy(const std::string& activity_id, const std::string& token) const {
  std::optional<Session> s;
  if (!token.empty()) s = authenticate(token);
  std::lock_guard lock(mu_);
  const auto it = activities_.find(activity_id);
  if (it == activities_.end()) throw ApiError(ApiError::NotFound, "no such activity");
  const Activity& a = it->second;
  const bool owner = s && s->user_id == a.owner_id;
  if (!owner && !(a.visibility.listed && a.visibility.occupancy)) throw ApiError(ApiError::NotFound, "no such activity");
  OccupancyView v{a.activity_id, 0, std::nullopt, 0};
  if (const auto st = broker_.occupancy().state(a.activity_id)) {
    v.occupancy = st->occupancy;
    v.as_of_ms = st->as_of_ms;
  }
  if (owner || a.visibility.capacity) v.capacity = a.capacity;
  return v;
}

std::vector<broker::HistoryPoint> Registry::query_history(const std::string& token, const std::string& activity_id,
                                                          std::int64_t from_ms, std::int64_t to_ms) const {
  const Session s = require_business(token);
  if (from_ms > to_ms) throw ApiError(ApiError::BadRequest, "from must not exceed to");
  {
    std::lock_guard lock(mu_);
    const auto it = activities_.find(activity_id);
    if (it == activities_.end() || it->second.owner_id != s.user_id) {
      throw ApiError(ApiError::NotFound, "no such activity");
    }
  }
  return broker_.occupancy().history(activity_id, from_ms, to_ms);
}

std::vector<NearbyEntry> Registry::list_nearby(double lat, double lon, double radius_m) const {
  const GeoPoint centre{lat, lon};
  if (!valid_geo(centre)) throw ApiError(ApiError::BadRequest, "invalid coordinates");
  if (!(radius_m > 0.0 && radius_m <= kMaxNearbyRadiusM)) {
    throw ApiError(ApiError::BadRequest, "radius must be in (0, 100000] metres");
  }
  std::vector<std::pair<std::pair<double, std::string>, const Activity*>> hits;
  std::lock_guard lock(mu_);
  for (const auto& [id, a] : activities_) {
    if (!a.visibility.listed) continue;
    const double d = haversine_m(centre, a.geo);
    if (d <= radius_m) hits.push_back({{d, id}, &a});
  }
  std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<NearbyEntry> out;
  for (const auto& [key, a] : hits) {
    json j = public_json(*a);
    j["distance_m"] = key.first;
    out.push_back({key.first, std::move(j)});
  }
  return out;
}

json Registry::activity_view(const std::string& activity_id, const std::string& token) const {
  std::optional<Session> s;
  if (!token.empty()) s = authenticate(token);
  std::lock_guard lock(mu_);
  const auto it = activities_.find(activity_id);
  if (it == activities_.end()) throw ApiError(ApiError::NotFound, "no such activity");
  if (s && s->user_id == it->second.owner_id) return owner_json(it->second);
  if (!it->second.visibility.listed) throw ApiError(ApiError::NotFound, "no such activity");
  return public_json(it->second);
}

std::optional<Activity> Registry::activity(const std::string& activity_id) const {
  std::lock_guard lock(mu_);
  const auto it = activities_.find(activity_id);
  if (it == activities_.end()) return std::nullopt;
  return it->second;
}

std::optional<User> Registry::user_by_email(const std::string& email) const {
  std::lock_guard lock(mu_);
  const auto it = users_.find(lower(email));
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

json Registry::to_json() const {
  json users = json::array();
  for (const auto& [email, u] : users_) {
    users.push_back({{"user_id", u.user_id},
                     {"email", u.email},
                     {"role", to_string(u.role)},
                     {"password", {{"algorithm", u.password.algorithm},
                                   {"iterations", u.password.iterations},
                                   {"salt", u.password.salt_hex},
                                   {"hash", u.password.hash_hex}}}});
  }
  json acts = json::array();
  for (const auto& [id, a] : activities_) acts.push_back(owner_json(a));
  json otps = json::array();
  for (const auto& [code, g] : otps_) {
    otps.push_back({{"otp", g.otp}, {"activity_id", g.activity_id}, {"issued_ms", g.issued_ms}, {"used", g.used}});
  }
  return {{"next_id", next_id_}, {"users", users}, {"activities", acts}, {"otps", otps}};
}

std::string Registry::dump() const {
  std::lock_guard lock(mu_);
  return to_json().dump(2);
}

void Registry::persist_locked() const {
  if (options_.state_path.empty()) return;
  const std::string tmp = options_.state_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << to_json().dump(2) << '\n';
    out.flush();
    if (!out) throw ConfigError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, options_.state_path);
}

void Registry::load() {
  if (options_.state_path.empty() || !std::filesystem::exists(options_.state_path)) return;
  std::ifstream in(options_.state_path);
  try {
    const json j = json::parse(in);
    next_id_ = j.at("next_id").get<std::uint64_t>();
    for (const auto& ju : j.at("users")) {
      User u;
      u.user_id = ju.at("user_id").get<std::string>();
      u.email = ju.at("email").get<std::string>();
      u.role = ju.at("role").get<std::string>() == "business" ? Role::Business : Role::Standard;
      const auto& p = ju.at("password");
      u.password = {p.at("algorithm").get<std::string>(), p.at("iterations").get<std::uint32_t>(),
                    p.at("salt").get<std::string>(), p.at("hash").get<std::string>()};
      users_.emplace(u.email, u);
    }
    for (const auto& ja : j.at("activities")) {
      Activity a;
      a.activity_id = ja.at("activity_id").get<std::string>();
      a.owner_id = ja.at("owner_id").get<std::string>();
      a.name = ja.at("name").get<std::string>();
      a.address = ja.at("address").get<std::string>();
      a.geo = {ja.at("lat").get<double>(), ja.at("lon").get<double>()};
      a.capacity = ja.at("capacity").get<std::int64_t>();
      a.visibility = visibility_from_json(ja.at("visibility"));
      a.device_ids = ja.at("device_ids").get<std::set<std::string>>();
      broker_.occupancy().add_location(a.activity_id);
      activities_.emplace(a.activity_id, a);
    }
    for (const auto& jo : j.at("otps")) {
      OtpGrant g{jo.at("otp").get<std::string>(), jo.at("activity_id").get<std::string>(),
                 jo.at("issued_ms").get<std::int64_t>(), jo.at("used").get<bool>()};
      otps_.emplace(g.otp, g);
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad registry state " + options_.state_path + ": " + e.what());
  }
  spdlog::info("registry state loaded: {} users, {} activities", users_.size(), activities_.size());
}

}  // namespace flowmon::registry
