#include "flowmon/broker/occupancy.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "flowmon/common/errors.hpp"

namespace flowmon::broker {

OccupancyStore::OccupancyStore(std::string journal_path) : journal_path_(std::move(journal_path)) {
  recover();
  journal_.open(journal_path_, std::ios::app);
  if (!journal_) throw ConfigError("cannot open journal " + journal_path_);
}

void OccupancyStore::add_location(const std::string& location_id) {
  std::lock_guard lock(mu_);
  auto& loc = locations_[location_id];
  loc.state.location_id = location_id;
}

bool OccupancyStore::has_location(const std::string& location_id) const {
  std::lock_guard lock(mu_);
  return locations_.count(location_id) != 0;
}

std::vector<std::string> OccupancyStore::locations() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, loc] : locations_) out.push_back(id);
  return out;
}

void OccupancyStore::step(Location& loc, int direction, std::int64_t timestamp_ms, bool& underflow) {
  underflow = false;
  if (direction < 0 && loc.state.occupancy == 0) {
    underflow = true;
    ++loc.state.anomaly_underflow;
  } else {
    loc.state.occupancy += direction;
  }
  loc.state.as_of_ms = timestamp_ms;
  ++loc.state.applied_events;
  loc.history.push_back({timestamp_ms, loc.state.occupancy});
}

ApplyResult OccupancyStore::apply(const std::string& location_id, const std::string& sensor_id,
                                  std::uint64_t event_seq, int direction, std::int64_t timestamp_ms) {
  if (direction != 1 && direction != -1) throw InputError("direction must be +1 or -1");
  if (sensor_id.empty() || sensor_id.find_first_of(" \t\r\n") != std::string::npos) {
    throw InputError("sensor_id must be a non-empty token");
  }
  std::lock_guard lock(mu_);
  ApplyResult result;
  const auto it = locations_.find(location_id);
  if (it == locations_.end()) {
    result.status = ApplyResult::Status::UnknownLocation;
    return result;
  }
  Location& loc = it->second;
  if (!loc.seen.emplace(sensor_id, event_seq).second) {
    result.status = ApplyResult::Status::Duplicate;
    result.state = loc.state;
    return result;
  }
  step(loc, direction, timestamp_ms, result.underflow);
  if (journal_.is_open()) {
    journal_ << location_id << ' ' << sensor_id << ' ' << event_seq << ' ' << direction << ' ' << timestamp_ms
             << '\n';
    journal_.flush();
    ++journal_lines_;
  }
  result.state = loc.state;
  return result;
}

std::optional<OccupancyState> OccupancyStore::state(const std::string& location_id) const {
  std::lock_guard lock(mu_);
  const auto it = locations_.find(location_id);
  if (it == locations_.end()) return std::nullopt;
  return it->second.state;
}

std::vector<HistoryPoint> OccupancyStore::history(const std::string& location_id, std::int64_t from_ms,
                                                  std::int64_t to_ms) const {
  std::lock_guard lock(mu_);
  std::vector<HistoryPoint> out;
  const auto it = locations_.find(location_id);
  if (it == locations_.end()) return out;
  for (const auto& p : it->second.history) {
    if (p.timestamp_ms >= from_ms && p.timestamp_ms <= to_ms) out.push_back(p);
  }
  return out;
}

void OccupancyStore::write_snapshot_locked() {
  if (journal_path_.empty()) return;
  const std::string path = snapshot_path();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write snapshot " + tmp);
    out << "#journal_lines " << journal_lines_ << '\n';
    for (const auto& [id, loc] : locations_) {
      out << id << ' ' << loc.state.occupancy << ' ' << loc.state.as_of_ms << '\n';
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot replace snapshot " + path);
}

void OccupancyStore::write_snapshot() {
  std::lock_guard lock(mu_);
  write_snapshot_locked();
}

void OccupancyStore::maybe_snapshot(std::int64_t now_ms, std::int64_t interval_ms) {
  std::lock_guard lock(mu_);
  if (journal_path_.empty() || interval_ms <= 0) return;
  if (last_snapshot_ms_ != 0 && now_ms - last_snapshot_ms_ < interval_ms) return;
  write_snapshot_locked();
  last_snapshot_ms_ = now_ms;
}

void OccupancyStore::recover() {
  struct SnapshotEntry {
    std::int64_t occupancy;
    std::int64_t as_of_ms;
  };
  std::map<std::string, SnapshotEntry> snapshot;
  std::uint64_t covered = 0;
  if (std::ifstream in(snapshot_path()); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream is(line);
      if (line[0] == '#') {
        std::string tag;
        is >> tag >> covered;
        continue;
      }
      std::string id;
      SnapshotEntry e{};
      if (!(is >> id >> e.occupancy >> e.as_of_ms)) throw ConfigError("malformed snapshot line: " + line);
      snapshot[id] = e;
    }
  }

  std::ifstream in(journal_path_, std::ios::binary);
  std::string line;
  std::uint64_t n = 0;
  std::uint64_t good_bytes = 0;
  std::uint64_t read_bytes = 0;
  while (in && std::getline(in, line)) {
    const bool terminated = !in.eof();
    read_bytes += line.size() + (terminated ? 1 : 0);
    if (!terminated) break;  // torn final line from a crash mid-write
    if (line.empty()) {
      good_bytes = read_bytes;
      continue;
    }
    std::istringstream is(line);
    std::string location_id;
    std::string sensor_id;
    std::uint64_t seq = 0;
    int direction = 0;
    std::int64_t ts = 0;
    if (!(is >> location_id >> sensor_id >> seq >> direction >> ts)) break;
    good_bytes = read_bytes;
    auto& loc = locations_[location_id];
    loc.state.location_id = location_id;
    loc.seen.emplace(sensor_id, seq);
    bool underflow = false;
    step(loc, direction, ts, underflow);
    ++n;
    if (n == covered) {
      // Cross-check the replayed prefix against the snapshot.
      for (const auto& [id, e] : snapshot) {
        const auto it = locations_.find(id);
        if (it == locations_.end() || it->second.state.occupancy != e.occupancy) {
          throw ConfigError("snapshot disagrees with journal for location " + id);
        }
      }
    }
  }
  for (const auto& [id, e] : snapshot) {
    auto& loc = locations_[id];
    loc.state.location_id = id;
    if (covered == 0 || n < covered) {
      // Journal shorter than the snapshot claims: trust the snapshot.
      loc.state.occupancy = e.occupancy;
      loc.state.as_of_ms = e.as_of_ms;
    }
  }
  journal_lines_ = n;

  in.close();
  std::error_code ec;
  if (std::filesystem::exists(journal_path_, ec) && std::filesystem::file_size(journal_path_, ec) > good_bytes) {
    std::filesystem::resize_file(journal_path_, good_bytes, ec);
    if (ec) throw ConfigError("cannot truncate torn journal " + journal_path_);
  }
}

std::string OccupancyStore::dump() const {
  std::lock_guard lock(mu_);
  std::ostringstream os;
  for (const auto& [id, loc] : locations_) {
    os << id << ' ' << loc.state.occupancy << ' ' << loc.state.as_of_ms << ' ' << loc.state.anomaly_underflow << ' '
       << loc.state.applied_events << '\n';
  }
  return os.str();
}

}  // namespace flowmon::broker
