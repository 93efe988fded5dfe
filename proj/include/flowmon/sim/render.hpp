#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "flowmon/sim/scenario.hpp"
#include "flowmon/thermal/frame.hpp"

namespace flowmon::sim {

struct PersonPosition {
  int person_id = 0;  // 1-based index into Scenario::persons
  double row = 0.0;   // 24x24 grid coordinates
  double col = 0.0;
};

struct TrueCrossing {
  int person_id = 0;
  int direction = 0;
  std::int64_t time_ms = 0;
  bool operator==(const TrueCrossing&) const = default;
};

struct RenderedFrame {
  thermal::ThermalFrame frame;
  std::vector<PersonPosition> truth;  // persons whose center is on the sensor
};

/// Streams the frames of a scenario in order. Frame k is the ambient field
/// plus one isotropic Gaussian per active person plus i.i.d. Gaussian noise,
/// quantized to the sensor lattice.
class Renderer {
 public:
  explicit Renderer(Scenario scenario);

  std::uint64_t frame_count() const { return frame_count_; }
  bool done() const { return next_ >= frame_count_; }
  RenderedFrame next();

  const Scenario& scenario() const { return scenario_; }

 private:
  Scenario scenario_;
  std::uint64_t frame_count_;
  std::uint64_t next_ = 0;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
};

/// Warm-body field (pre-noise, pre-quantization) of one person centered at
/// source coordinates (row, col).
void add_person(thermal::SensorGrid& grid, double row, double col, double peak_c, double sigma_cells);

/// True crossings of every transit that crosses the midline inside the
/// scenario, ordered by time.
std::vector<TrueCrossing> true_crossings(const Scenario& scenario);

/// Ground-truth file: one line per event, `person_id direction time_ms`.
void write_ground_truth(std::ostream& out, const std::vector<TrueCrossing>& crossings);

}  // namespace flowmon::sim
