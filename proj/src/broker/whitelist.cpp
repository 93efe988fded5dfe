#include "flowmon/broker/whitelist.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "flowmon/common/errors.hpp"
#include "flowmon/common/random.hpp"

namespace flowmon::broker {

using nlohmann::json;

std::string normalize_key(const std::string& key) {
  std::string out = key;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void Whitelist::add_device(DeviceRecord record) {
  std::lock_guard lock(mu_);
  if (record.device_id.empty()) throw ConfigError("device_id must not be empty");
  if (devices_.count(record.device_id)) throw ConfigError("duplicate device " + record.device_id);
  for (auto& key : record.keys) {
    if (!is_hex(key, kKeyHexLength)) throw ConfigError("device key must be 32 hex characters");
    key = normalize_key(key);
    if (key_owner_.count(key) || revoked_.count(key)) throw ConfigError("duplicate device key");
  }
  for (const auto& key : record.keys) key_owner_[key] = record.device_id;
  ++version_;
  devices_[record.device_id] = std::move(record);
}

std::optional<std::string> Whitelist::authenticate(const std::string& key) const {
  std::lock_guard lock(mu_);
  const std::string k = normalize_key(key);
  if (revoked_.count(k)) return std::nullopt;
  const auto it = key_owner_.find(k);
  if (it == key_owner_.end()) return std::nullopt;
  return it->second;
}

bool Whitelist::is_revoked(const std::string& key) const {
  std::lock_guard lock(mu_);
  return revoked_.count(normalize_key(key)) != 0;
}

std::optional<DeviceRecord> Whitelist::device(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  const auto it = devices_.find(device_id);
  if (it == devices_.end()) return std::nullopt;
  return it->second;
}

std::vector<DeviceRecord> Whitelist::devices() const {
  std::lock_guard lock(mu_);
  std::vector<DeviceRecord> out;
  for (const auto& [id, rec] : devices_) out.push_back(rec);
  return out;
}

bool Whitelist::has_device(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  return devices_.count(device_id) != 0;
}

void Whitelist::set_location(const std::string& device_id, const std::string& location_id,
                             const std::string& location_name) {
  std::lock_guard lock(mu_);
  const auto it = devices_.find(device_id);
  if (it == devices_.end()) throw InputError("unknown device " + device_id);
  it->second.location_id = location_id;
  it->second.location_name = location_name;
  ++version_;
}

void Whitelist::revoke_locked(const std::string& key) {
  const auto it = key_owner_.find(key);
  if (it != key_owner_.end()) {
    auto& keys = devices_[it->second].keys;
    std::erase(keys, key);
    key_owner_.erase(it);
  }
  revoked_.insert(key);
  ++version_;
}

void Whitelist::revoke(const std::string& key) {
  std::lock_guard lock(mu_);
  revoke_locked(normalize_key(key));
}

std::string Whitelist::rotate(const std::string& device_id, std::int64_t now_ms, std::int64_t grace_ms) {
  std::lock_guard lock(mu_);
  const auto it = devices_.find(device_id);
  if (it == devices_.end()) throw InputError("unknown device " + device_id);

  std::string fresh;
  do {
    fresh = random_hex(kKeyHexLength / 2);
  } while (key_owner_.count(fresh) || revoked_.count(fresh));

  // A rotation that supersedes an unfinished one retires the intermediate key.
  std::string old_key;
  if (auto p = pending_.find(device_id); p != pending_.end()) {
    old_key = p->second.old_key;
    revoke_locked(p->second.new_key);
  } else if (!it->second.keys.empty()) {
    old_key = it->second.keys.front();
  }
  it->second.keys.push_back(fresh);
  key_owner_[fresh] = device_id;
  pending_[device_id] = {old_key, fresh, now_ms + grace_ms};
  ++version_;
  return fresh;
}

std::vector<std::string> Whitelist::confirm_key(const std::string& device_id, const std::string& key) {
  std::lock_guard lock(mu_);
  const auto p = pending_.find(device_id);
  if (p == pending_.end() || p->second.new_key != normalize_key(key)) return {};
  std::vector<std::string> revoked;
  for (const auto& k : devices_[device_id].keys) {
    if (k != p->second.new_key) revoked.push_back(k);
  }
  for (const auto& k : revoked) revoke_locked(k);
  pending_.erase(p);
  return revoked;
}

std::vector<std::string> Whitelist::expire(std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  std::vector<std::string> revoked;
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (now_ms < it->second.deadline_ms) {
      ++it;
      continue;
    }
    for (const auto& k : devices_[it->first].keys) {
      if (k != it->second.new_key) revoked.push_back(k);
    }
    for (const auto& k : revoked) revoke_locked(k);
    it = pending_.erase(it);
  }
  return revoked;
}

std::optional<PendingRotation> Whitelist::pending(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  const auto it = pending_.find(device_id);
  if (it == pending_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Whitelist::version() const {
  std::lock_guard lock(mu_);
  return version_;
}

json Whitelist::to_json() const {
  std::lock_guard lock(mu_);
  json devices = json::array();
  for (const auto& [id, rec] : devices_) {
    devices.push_back({{"device_id", rec.device_id},
                       {"device_type", rec.device_type},
                       {"location_id", rec.location_id},
                       {"location_name", rec.location_name},
                       {"constants", rec.constants},
                       {"keys", rec.keys}});
  }
  json pending = json::array();
  for (const auto& [id, p] : pending_) {
    pending.push_back({{"device_id", id}, {"old_key", p.old_key}, {"new_key", p.new_key}, {"deadline_ms", p.deadline_ms}});
  }
  return {{"devices", devices}, {"revoked", revoked_}, {"pending", pending}};
}

void Whitelist::load_json(const json& j) {
  try {
    {
      std::lock_guard lock(mu_);
      for (const auto& k : j.value("revoked", json::array())) revoked_.insert(normalize_key(k.get<std::string>()));
    }
    for (const auto& jd : j.at("devices")) {
      DeviceRecord rec;
      rec.device_id = jd.at("device_id").get<std::string>();
      rec.device_type = jd.value("device_type", rec.device_type);
      rec.location_id = jd.value("location_id", std::string{});
      rec.location_name = jd.value("location_name", std::string{});
      rec.constants = jd.value("constants", json::object());
      if (jd.contains("keys")) {
        rec.keys = jd.at("keys").get<std::vector<std::string>>();
      } else {
        rec.keys.push_back(jd.at("key").get<std::string>());
      }
      add_device(std::move(rec));
    }
    std::lock_guard lock(mu_);
    for (const auto& jp : j.value("pending", json::array())) {
      pending_[jp.at("device_id").get<std::string>()] = {
          normalize_key(jp.at("old_key").get<std::string>()), normalize_key(jp.at("new_key").get<std::string>()),
          jp.at("deadline_ms").get<std::int64_t>()};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad whitelist: ") + e.what());
  }
}

void Whitelist::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open whitelist " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("whitelist " + path + ": " + e.what());
  }
  load_json(j);
}

void Whitelist::save(const std::string& path) const {
  if (path.empty()) return;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write whitelist " + tmp);
    out << to_json().dump(2) << '\n';
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot replace whitelist " + path);
}

}  // namespace flowmon::broker
