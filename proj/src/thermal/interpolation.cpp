#include "flowmon/thermal/interpolation.hpp"

#include <cmath>

namespace flowmon::thermal {

double catmull_rom(double x) {
  constexpr double a = kCatmullRomA;
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

// A sample at integer index k outside [0, n-1] is written as a combination
// of the two nearest border cells: f(-k) = (1+k) f(0) - k f(1), and
// symmetrically past the far edge.
void add_extended(std::array<double, kSensorSize>& row, int k, double w) {
  constexpr int last = static_cast<int>(kSensorSize) - 1;
  if (k < 0) {
    const double d = -k;
    row[0] += w * (1.0 + d);
    row[1] -= w * d;
  } else if (k > last) {
    const double d = k - last;
    row[last] += w * (1.0 + d);
    row[last - 1] -= w * d;
  } else {
    row[static_cast<std::size_t>(k)] += w;
  }
}

AxisWeights build_axis_weights() {
  AxisWeights weights{};
  for (std::size_t i = 0; i < kUpscaledSize; ++i) {
    const double s = upscaled_to_source(static_cast<double>(i));
    const int base = static_cast<int>(std::floor(s));
    for (int k = base - 1; k <= base + 2; ++k) {
      add_extended(weights[i], k, catmull_rom(s - k));
    }
  }
  return weights;
}

}  // namespace

const AxisWeights& axis_weights() {
  static const AxisWeights weights = build_axis_weights();
  return weights;
}

InterpolatedFrame interpolate_bicubic(const ThermalFrame& frame) {
  validate(frame);
  const AxisWeights& w = axis_weights();

  // Columns first: 8 x 24 intermediate.
  Grid<double, kSensorSize, kUpscaledSize> horizontal;
  for (std::size_t r = 0; r < kSensorSize; ++r) {
    for (std::size_t c = 0; c < kUpscaledSize; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < kSensorSize; ++j) acc += w[c][j] * frame.cells(r, j);
      horizontal(r, c) = acc;
    }
  }

  InterpolatedFrame out;
  out.source_seq = frame.seq;
  for (std::size_t r = 0; r < kUpscaledSize; ++r) {
    for (std::size_t c = 0; c < kUpscaledSize; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < kSensorSize; ++i) acc += w[r][i] * horizontal(i, c);
      out.cells(r, c) = acc;
    }
  }
  return out;
}

}  // namespace flowmon::thermal
