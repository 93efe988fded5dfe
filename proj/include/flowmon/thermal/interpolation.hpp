#pragma once

#include <array>

#include "flowmon/thermal/frame.hpp"

namespace flowmon::thermal {

inline constexpr double kCatmullRomA = -0.5;

/// Cubic convolution kernel with a = -0.5.
double catmull_rom(double x);

/// Upscales 8x8 -> 24x24 with separable Catmull-Rom reconstruction.
/// Samples outside the sensor are linear extrapolations of the two nearest
/// border cells, so constant and linear fields are reproduced exactly.
/// Throws InputError for a frame that fails validate().
InterpolatedFrame interpolate_bicubic(const ThermalFrame& frame);

/// Effective weight of source index j for output index i along one axis,
/// after the border extension is folded in. Rows sum to 1.
using AxisWeights = std::array<std::array<double, kSensorSize>, kUpscaledSize>;
const AxisWeights& axis_weights();

}  // namespace flowmon::thermal
