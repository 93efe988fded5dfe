#include "flowmon/flow/flow_event.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "flowmon/common/errors.hpp"

namespace flowmon::flow {

std::string format_event_line(const FlowEvent& event) {
  std::ostringstream os;
  os << event.sensor_id << ' ' << event.event_seq << ' ' << event.direction << ' ' << event.timestamp_ms;
  return os.str();
}

FlowEvent parse_event_line(std::string_view line) {
  std::istringstream is{std::string(line)};
  FlowEvent event;
  std::string extra;
  if (!(is >> event.sensor_id >> event.event_seq >> event.direction >> event.timestamp_ms) || (is >> extra)) {
    throw InputError("malformed event line: '" + std::string(line) + "'");
  }
  if (event.direction != 1 && event.direction != -1) {
    throw InputError("event direction must be +1 or -1");
  }
  return event;
}

void write_event_log(std::ostream& out, const std::vector<FlowEvent>& events) {
  for (const auto& e : events) out << format_event_line(e) << '\n';
}

std::vector<FlowEvent> read_event_log(std::istream& in) {
  std::vector<FlowEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    events.push_back(parse_event_line(line));
  }
  return events;
}

}  // namespace flowmon::flow
