#include "flowmon/thermal/frame.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowmon/common/errors.hpp"

namespace flowmon::thermal {

void validate(const ThermalFrame& frame) {
  for (std::size_t i = 0; i < SensorGrid::kSize; ++i) {
    const double v = frame.cells[i];
    if (!(v >= kMinTempC && v <= kMaxTempC)) {
      std::ostringstream os;
      os << "cell " << i << " out of range: " << v;
      throw InputError(os.str());
    }
    const double steps = v / kQuantumC;
    if (steps != std::floor(steps)) {
      std::ostringstream os;
      os << "cell " << i << " not a multiple of " << kQuantumC << ": " << v;
      throw InputError(os.str());
    }
  }
}

double quantize(double celsius) {
  const double q = std::round(celsius / kQuantumC) * kQuantumC;
  return std::clamp(q, kMinTempC, kMaxTempC);
}

}  // namespace flowmon::thermal
