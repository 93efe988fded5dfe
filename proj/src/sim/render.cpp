#include "flowmon/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "flowmon/common/errors.hpp"

namespace flowmon::sim {

using thermal::kSensorSize;

void add_person(thermal::SensorGrid& grid, double row, double col, double peak_c, double sigma_cells) {
  const double inv = 1.0 / (2.0 * sigma_cells * sigma_cells);
  for (std::size_t r = 0; r < kSensorSize; ++r) {
    for (std::size_t c = 0; c < kSensorSize; ++c) {
      const double dr = static_cast<double>(r) - row;
      const double dc = static_cast<double>(c) - col;
      grid(r, c) += peak_c * std::exp(-(dr * dr + dc * dc) * inv);
    }
  }
}

Renderer::Renderer(Scenario scenario)
    : scenario_(std::move(scenario)),
      frame_count_(0),
      rng_(scenario_.seed),
      noise_(0.0, 1.0) {
  validate(scenario_);
  frame_count_ = static_cast<std::uint64_t>(std::floor(scenario_.duration_s * scenario_.fps));
}

RenderedFrame Renderer::next() {
  if (done()) throw InputError("renderer exhausted");
  const std::uint64_t k = next_++;
  const double t = static_cast<double>(k) / scenario_.fps;

  RenderedFrame out;
  out.frame.sensor_id = scenario_.sensor_id;
  out.frame.seq = k + 1;
  out.frame.timestamp_ms = scenario_.start_ms + static_cast<std::int64_t>(std::llround(t * 1000.0));

  thermal::SensorGrid field(scenario_.ambient_c);
  for (std::size_t i = 0; i < scenario_.persons.size(); ++i) {
    const PersonScript& p = scenario_.persons[i];
    const double local = t - p.enter_time_s;
    if (local < 0.0 || local > p.scene_time_s()) continue;
    double row = 0.0;
    double col = 0.0;
    p.center_at(local, row, col);
    add_person(field, row, col, p.body_excess_c, p.blob_sigma_cells);
    const double lo = -0.5;
    const double hi = static_cast<double>(kSensorSize) - 0.5;
    if (row >= lo && row < hi && col >= lo && col < hi) {
      out.truth.push_back({static_cast<int>(i) + 1, thermal::source_to_upscaled(row),
                           thermal::source_to_upscaled(col)});
    }
  }

  // Noise is drawn for every cell of every frame so the stream for a seed
  // does not depend on how many persons are active.
  for (std::size_t i = 0; i < thermal::SensorGrid::kSize; ++i) {
    const double n = noise_(rng_);
    out.frame.cells[i] = thermal::quantize(field[i] + scenario_.noise_sigma_c * n);
  }
  return out;
}

std::vector<TrueCrossing> true_crossings(const Scenario& scenario) {
  std::vector<TrueCrossing> out;
  for (std::size_t i = 0; i < scenario.persons.size(); ++i) {
    const PersonScript& p = scenario.persons[i];
    if (p.direction() == 0) continue;
    const double t = p.enter_time_s + p.crossing_offset_s();
    if (t >= scenario.duration_s) continue;
    out.push_back({static_cast<int>(i) + 1, p.direction(),
                   scenario.start_ms + static_cast<std::int64_t>(std::llround(t * 1000.0))});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TrueCrossing& a, const TrueCrossing& b) { return a.time_ms < b.time_ms; });
  return out;
}

void write_ground_truth(std::ostream& out, const std::vector<TrueCrossing>& crossings) {
  for (const auto& c : crossings) out << c.person_id << ' ' << c.direction << ' ' << c.time_ms << '\n';
}

}  // namespace flowmon::sim
