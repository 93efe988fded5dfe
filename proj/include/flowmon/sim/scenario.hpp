#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace flowmon::sim {

// Geometry of the sensor footprint. At ~2 m mounting height an 8x8 array
// with a 60 degree field of view covers roughly 2.3 m of floor, so one
// source cell is ~0.29 m.
inline constexpr double kFootprintMeters = 2.31;
inline constexpr double kCellsPerMeter = 8.0 / kFootprintMeters;

// Transits start and end outside the footprint so blobs enter from an edge.
inline constexpr double kPathStartRow = -2.5;
inline constexpr double kPathEndRow = 9.5;
inline constexpr double kMidlineRow = 3.5;

enum class PathKind { Entry, Exit, Loiter };

std::string to_string(PathKind kind);
PathKind path_kind_from_string(const std::string& s);

struct PersonScript {
  double enter_time_s = 0.0;
  PathKind path = PathKind::Entry;
  double speed_mps = 1.1;
  double body_excess_c = 8.0;
  double blob_sigma_cells = 0.9;
  double col = 3.5;         // lateral position, source cells
  double loiter_row = 3.5;  // loiter only: where the person stops
  double loiter_s = 30.0;   // loiter only: how long they stay

  /// Seconds from entering the scene to leaving it.
  double scene_time_s() const;
  /// Source-grid center `t` seconds after enter_time_s.
  void center_at(double t, double& row, double& col_out) const;
  /// Seconds after enter_time_s when the midline is crossed (transits only).
  double crossing_offset_s() const;
  int direction() const;  // +1 entry, -1 exit, 0 loiter
};

struct Scenario {
  std::uint64_t seed = 1;
  std::string sensor_id = "sensor-1";
  double ambient_c = 22.0;
  double fps = 10.0;
  double duration_s = 60.0;
  double noise_sigma_c = 0.3;
  std::int64_t start_ms = 1'760'000'000'000;
  std::vector<PersonScript> persons;
};

/// Throws ConfigError for invalid parameters.
void validate(const Scenario& scenario);

nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

}  // namespace flowmon::sim
