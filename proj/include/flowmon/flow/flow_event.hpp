#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace flowmon::flow {

/// One directional passage: +1 entry (zone A -> B), -1 exit (B -> A).
struct FlowEvent {
  std::string sensor_id;
  std::uint64_t event_seq = 0;
  int direction = 0;
  std::int64_t timestamp_ms = 0;

  bool operator==(const FlowEvent&) const = default;
};

// Event log line: `sensor_id event_seq direction timestamp_ms`.
std::string format_event_line(const FlowEvent& event);
FlowEvent parse_event_line(std::string_view line);

void write_event_log(std::ostream& out, const std::vector<FlowEvent>& events);
std::vector<FlowEvent> read_event_log(std::istream& in);

}  // namespace flowmon::flow
