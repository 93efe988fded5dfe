#include "flowmon/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "flowmon/common/errors.hpp"

namespace flowmon::harness {

using nlohmann::json;

json to_json(const DayReport& d) {
  json j{{"day_index", d.day_index},
         {"true_passes", d.true_passes},
         {"true_entries", d.true_entries},
         {"true_exits", d.true_exits},
         {"detected", {{"entries", d.detected_entries}, {"exits", d.detected_exits}}},
         {"occupancy_end", d.occupancy_end},
         {"drift", d.drift},
         {"underflows", d.underflows},
         {"complete", d.complete}};
  if (!d.note.empty()) j["note"] = d.note;
  return j;
}

DayReport day_report_from_json(const json& j) {
  try {
    DayReport d;
    d.day_index = j.at("day_index").get<int>();
    d.true_passes = j.at("true_passes").get<std::uint64_t>();
    d.true_entries = j.at("true_entries").get<std::uint64_t>();
    d.true_exits = j.at("true_exits").get<std::uint64_t>();
    d.detected_entries = j.at("detected").at("entries").get<std::uint64_t>();
    d.detected_exits = j.at("detected").at("exits").get<std::uint64_t>();
    d.occupancy_end = j.at("occupancy_end").get<std::int64_t>();
    d.drift = j.at("drift").get<std::int64_t>();
    d.underflows = j.at("underflows").get<std::uint64_t>();
    d.complete = j.at("complete").get<bool>();
    d.note = j.value("note", std::string{});
    return d;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad report record: ") + e.what());
  }
}

std::string report_jsonl(const std::vector<DayReport>& days) {
  std::string out;
  for (const auto& d : days) out += to_json(d).dump() + "\n";
  return out;
}

std::vector<DayReport> parse_report_jsonl(const std::string& text) {
  std::vector<DayReport> days;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      days.push_back(day_report_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw InputError(std::string("bad report line: ") + e.what());
    }
  }
  return days;
}

double median_drift(const std::vector<DayReport>& days) {
  if (days.empty()) return 0.0;
  std::vector<std::int64_t> v;
  for (const auto& d : days) v.push_back(d.drift);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? static_cast<double>(v[n / 2]) : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::int64_t max_drift(const std::vector<DayReport>& days) {
  std::int64_t m = 0;
  for (const auto& d : days) m = std::max(m, d.drift);
  return m;
}

std::string report_table(const std::vector<DayReport>& days) {
  std::string out = " day  passes  entries  exits  det_in  det_out  occ_end  drift  underflow\n";
  char line[160];
  for (const auto& d : days) {
    std::snprintf(line, sizeof line, "%4d  %6llu  %7llu  %5llu  %6llu  %7llu  %7lld  %5lld  %9llu%s\n", d.day_index,
                  static_cast<unsigned long long>(d.true_passes), static_cast<unsigned long long>(d.true_entries),
                  static_cast<unsigned long long>(d.true_exits), static_cast<unsigned long long>(d.detected_entries),
                  static_cast<unsigned long long>(d.detected_exits), static_cast<long long>(d.occupancy_end),
                  static_cast<long long>(d.drift), static_cast<unsigned long long>(d.underflows),
                  d.complete ? "" : "  INCOMPLETE");
    out += line;
  }
  std::size_t zero = 0;
  for (const auto& d : days) zero += d.drift == 0;
  std::snprintf(line, sizeof line, "days %zu, drift 0 on %zu, max drift %lld, median drift %.1f\n", days.size(), zero,
                static_cast<long long>(max_drift(days)), median_drift(days));
  out += line;
  return out;
}

}  // namespace flowmon::harness
