#include "flowmon/thermal/frame_io.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "flowmon/common/errors.hpp"

namespace flowmon::thermal {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

template <typename T>
T parse_number(std::string_view token, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw InputError(std::string("bad ") + what + ": '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

std::string format_frame_line(const ThermalFrame& frame) {
  std::ostringstream os;
  os << frame.sensor_id << ' ' << frame.seq << ' ' << frame.timestamp_ms;
  // Quantized values have at most two decimals; %.2f keeps dumps canonical.
  char buf[16];
  for (double v : frame.cells) {
    std::snprintf(buf, sizeof buf, " %.2f", v);
    os << buf;
  }
  return os.str();
}

ThermalFrame parse_frame_line(std::string_view line) {
  const auto tokens = split_ws(line);
  constexpr std::size_t kExpected = 3 + SensorGrid::kSize;
  if (tokens.size() != kExpected) {
    throw InputError("frame line has " + std::to_string(tokens.size()) + " tokens, expected " +
                     std::to_string(kExpected));
  }
  ThermalFrame frame;
  frame.sensor_id = std::string(tokens[0]);
  frame.seq = parse_number<std::uint64_t>(tokens[1], "seq");
  frame.timestamp_ms = parse_number<std::int64_t>(tokens[2], "timestamp");
  for (std::size_t i = 0; i < SensorGrid::kSize; ++i) {
    frame.cells[i] = parse_number<double>(tokens[3 + i], "temperature");
  }
  validate(frame);
  return frame;
}

void write_frame_dump(std::ostream& out, const std::vector<ThermalFrame>& frames) {
  for (const auto& f : frames) out << format_frame_line(f) << '\n';
}

std::vector<ThermalFrame> read_frame_dump(std::istream& in) {
  std::vector<ThermalFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    frames.push_back(parse_frame_line(line));
  }
  return frames;
}

}  // namespace flowmon::thermal
