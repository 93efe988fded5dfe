#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "flowmon/thermal/frame.hpp"

namespace flowmon::thermal {

// Frame dump line: `sensor_id seq timestamp_ms t00 t01 ... t77` (67 tokens,
// row-major temperatures).

std::string format_frame_line(const ThermalFrame& frame);

/// Throws InputError unless the line has exactly 67 tokens that parse and
/// the resulting frame validates.
ThermalFrame parse_frame_line(std::string_view line);

void write_frame_dump(std::ostream& out, const std::vector<ThermalFrame>& frames);
std::vector<ThermalFrame> read_frame_dump(std::istream& in);

}  // namespace flowmon::thermal
