#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "flowmon/harness/day_runner.hpp"

namespace flowmon::harness {

nlohmann::json to_json(const DayReport& d);
DayReport day_report_from_json(const nlohmann::json& j);

/// One JSON object per line, one line per day.
std::string report_jsonl(const std::vector<DayReport>& days);
std::vector<DayReport> parse_report_jsonl(const std::string& text);

/// Fixed-width table with a summary footer (max and median drift).
std::string report_table(const std::vector<DayReport>& days);

/// Median of the drift column (mean of the middle two for even counts).
double median_drift(const std::vector<DayReport>& days);
std::int64_t max_drift(const std::vector<DayReport>& days);

}  // namespace flowmon::harness
