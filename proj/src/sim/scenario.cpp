#include "flowmon/sim/scenario.hpp"

#include <algorithm>
#include <fstream>

#include "flowmon/common/errors.hpp"

namespace flowmon::sim {

std::string to_string(PathKind kind) {
  switch (kind) {
    case PathKind::Entry: return "entry";
    case PathKind::Exit: return "exit";
    case PathKind::Loiter: return "loiter";
  }
  return "entry";
}

PathKind path_kind_from_string(const std::string& s) {
  if (s == "entry") return PathKind::Entry;
  if (s == "exit") return PathKind::Exit;
  if (s == "loiter") return PathKind::Loiter;
  throw ConfigError("unknown path kind '" + s + "'");
}

namespace {
double cells_per_second(const PersonScript& p) { return p.speed_mps * kCellsPerMeter; }
}  // namespace

double PersonScript::scene_time_s() const {
  const double v = cells_per_second(*this);
  if (path == PathKind::Loiter) {
    return 2.0 * (loiter_row - kPathStartRow) / v + loiter_s;
  }
  return (kPathEndRow - kPathStartRow) / v;
}

void PersonScript::center_at(double t, double& row, double& col_out) const {
  const double v = cells_per_second(*this);
  col_out = col;
  switch (path) {
    case PathKind::Entry:
      row = kPathStartRow + v * t;
      break;
    case PathKind::Exit:
      row = kPathEndRow - v * t;
      break;
    case PathKind::Loiter: {
      const double walk = (loiter_row - kPathStartRow) / v;
      if (t < walk) {
        row = kPathStartRow + v * t;
      } else if (t < walk + loiter_s) {
        row = loiter_row;
      } else {
        row = loiter_row - v * (t - walk - loiter_s);
      }
      break;
    }
  }
}

double PersonScript::crossing_offset_s() const {
  return (kMidlineRow - kPathStartRow) / cells_per_second(*this);
}

int PersonScript::direction() const {
  switch (path) {
    case PathKind::Entry: return +1;
    case PathKind::Exit: return -1;
    case PathKind::Loiter: return 0;
  }
  return 0;
}

void validate(const Scenario& s) {
  if (!(s.fps > 0.0)) throw ConfigError("fps must be positive");
  if (!(s.duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (!(s.noise_sigma_c >= 0.0)) throw ConfigError("noise_sigma_c must be non-negative");
  if (!(s.ambient_c >= 0.0 && s.ambient_c <= 80.0)) throw ConfigError("ambient_c out of sensor range");
  if (s.sensor_id.empty() || s.sensor_id.find_first_of(" \t\r\n") != std::string::npos) {
    throw ConfigError("sensor_id must be a non-empty token");
  }
  for (const auto& p : s.persons) {
    if (!(p.enter_time_s >= 0.0 && p.enter_time_s < s.duration_s)) {
      throw ConfigError("person enter_time_s outside scenario duration");
    }
    if (!(p.speed_mps > 0.0)) throw ConfigError("person speed must be positive");
    if (!(p.blob_sigma_cells > 0.0)) throw ConfigError("blob sigma must be positive");
    if (!(p.body_excess_c >= 0.0)) throw ConfigError("body excess must be non-negative");
    if (p.path == PathKind::Loiter && !(p.loiter_s >= 0.0 && p.loiter_row > kPathStartRow)) {
      throw ConfigError("invalid loiter parameters");
    }
  }
}

nlohmann::json to_json(const Scenario& s) {
  nlohmann::json persons = nlohmann::json::array();
  for (const auto& p : s.persons) {
    nlohmann::json jp = {
        {"enter_time_s", p.enter_time_s}, {"path", to_string(p.path)},
        {"speed_mps", p.speed_mps},       {"body_excess_c", p.body_excess_c},
        {"blob_sigma_cells", p.blob_sigma_cells}, {"col", p.col},
    };
    if (p.path == PathKind::Loiter) {
      jp["loiter_row"] = p.loiter_row;
      jp["loiter_s"] = p.loiter_s;
    }
    persons.push_back(std::move(jp));
  }
  return {
      {"seed", s.seed},           {"sensor_id", s.sensor_id},         {"ambient_c", s.ambient_c},
      {"fps", s.fps},             {"duration_s", s.duration_s},       {"noise_sigma_c", s.noise_sigma_c},
      {"start_ms", s.start_ms},   {"persons", std::move(persons)},
  };
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.seed = j.value("seed", s.seed);
    s.sensor_id = j.value("sensor_id", s.sensor_id);
    s.ambient_c = j.value("ambient_c", s.ambient_c);
    s.fps = j.value("fps", s.fps);
    s.duration_s = j.at("duration_s").get<double>();
    s.noise_sigma_c = j.value("noise_sigma_c", s.noise_sigma_c);
    s.start_ms = j.value("start_ms", s.start_ms);
    for (const auto& jp : j.value("persons", nlohmann::json::array())) {
      PersonScript p;
      p.enter_time_s = jp.at("enter_time_s").get<double>();
      p.path = path_kind_from_string(jp.at("path").get<std::string>());
      p.speed_mps = jp.value("speed_mps", p.speed_mps);
      p.body_excess_c = jp.value("body_excess_c", p.body_excess_c);
      p.blob_sigma_cells = jp.value("blob_sigma_cells", p.blob_sigma_cells);
      p.col = jp.value("col", p.col);
      p.loiter_row = jp.value("loiter_row", p.loiter_row);
      p.loiter_s = jp.value("loiter_s", p.loiter_s);
      s.persons.push_back(p);
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scenario file " + path);
  out << to_json(scenario).dump(2) << '\n';
}

}  // namespace flowmon::sim
