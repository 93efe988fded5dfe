#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowmon/broker/transport.hpp"
#include "flowmon/sim/scenario.hpp"

namespace flowmon::harness {

/// One row of the simulation report.
struct DayReport {
  int day_index = 0;
  std::uint64_t true_passes = 0;
  std::uint64_t true_entries = 0;
  std::uint64_t true_exits = 0;
  std::uint64_t detected_entries = 0;
  std::uint64_t detected_exits = 0;
  std::int64_t occupancy_end = 0;
  std::int64_t drift = 0;  // |occupancy_end - true net flow|
  std::uint64_t underflows = 0;
  bool complete = true;
  std::string note;
  bool operator==(const DayReport&) const = default;
};

struct DayRunOptions {
  broker::LinkFaults faults;
  /// When set, `<prefix>.frames`, `.events` and `.truth` are written.
  std::string artifact_prefix;
};

/// Runs one scenario end to end on a fresh in-process broker, registry and
/// device, driven by a ManualClock that follows the frame timestamps.
DayReport run_day(const sim::Scenario& scenario, int day_index, const DayRunOptions& options = {});

}  // namespace flowmon::harness
