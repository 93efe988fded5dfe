#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "flowmon/common/grid.hpp"

namespace flowmon::thermal {

inline constexpr std::size_t kSensorSize = 8;
inline constexpr std::size_t kUpscaleFactor = 3;
inline constexpr std::size_t kUpscaledSize = kSensorSize * kUpscaleFactor;

inline constexpr double kQuantumC = 0.25;
inline constexpr double kMinTempC = 0.0;
inline constexpr double kMaxTempC = 80.0;

using SensorGrid = Grid<double, kSensorSize, kSensorSize>;
using UpscaledGrid = Grid<double, kUpscaledSize, kUpscaledSize>;
using Mask = Grid<bool, kUpscaledSize, kUpscaledSize>;

/// One raw 8x8 reading. Temperatures in degrees C, quantized to 0.25.
struct ThermalFrame {
  std::string sensor_id;
  std::uint64_t seq = 0;
  std::int64_t timestamp_ms = 0;
  SensorGrid cells;

  bool operator==(const ThermalFrame&) const = default;
};

/// Throws InputError if any cell is out of range or off the 0.25 lattice.
void validate(const ThermalFrame& frame);

/// Round to the sensor lattice and clamp into the valid range.
double quantize(double celsius);

struct InterpolatedFrame {
  UpscaledGrid cells;
  std::uint64_t source_seq = 0;
};

/// Source-grid coordinate sampled by upscaled index `i`.
constexpr double upscaled_to_source(double i) {
  return (i + 0.5) / static_cast<double>(kUpscaleFactor) - 0.5;
}

/// Upscaled-grid coordinate of source coordinate `s` (inverse of the above).
constexpr double source_to_upscaled(double s) {
  return (s + 0.5) * static_cast<double>(kUpscaleFactor) - 0.5;
}

}  // namespace flowmon::thermal
