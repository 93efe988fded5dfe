#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowmon/harness/day_runner.hpp"
#include "flowmon/sim/scenario.hpp"
#include "flowmon/sim/test_day.hpp"

namespace flowmon::harness {

/// Where the live components are, for runs against a running stack.
struct ExternalTarget {
  std::string broker;         // host:port
  std::string registry;       // host:port
  std::string activity_id;
  std::string device_config;  // device settings file
  std::string token;          // bearer token, needed when occupancy is hidden
  bool enabled() const { return !broker.empty(); }
};

/// Run manifest (JSON):
///   seed, days, passes_per_day, passes_spread, duration_s, noise_sigma_c,
///   drop_probability, scenarios [paths], output_dir, write_frames,
///   external {broker, registry, activity_id, device_config, token}
/// Relative paths are resolved against the manifest's directory.
struct RunManifest {
  std::uint64_t seed = 1;
  int days = 1;
  std::uint64_t passes_per_day = 42;
  std::uint64_t passes_spread = 6;  // day counts drawn from avg +- spread
  sim::DayOptions day;
  double drop_probability = 0.0;
  std::vector<std::string> scenarios;  // overrides generated days
  std::string output_dir;
  bool write_frames = true;
  ExternalTarget external;
};

RunManifest load_manifest(const std::string& path);  // throws ConfigError

/// The scenario of every day, generated from the seed unless listed.
std::vector<sim::Scenario> manifest_scenarios(const RunManifest& m);

struct RunResult {
  std::vector<DayReport> days;
  bool complete = true;
};

/// Runs every day, writing artifacts and `report.jsonl` / `report.txt` to
/// output_dir when set. A day that cannot finish stops the run; the
/// partial report is kept and marked incomplete.
RunResult run_manifest(const RunManifest& m, std::ostream* progress = nullptr);

/// One day against running broker and registry processes.
DayReport run_day_external(sim::Scenario scenario, int day_index, const ExternalTarget& target,
                           const std::string& artifact_prefix = {});

}  // namespace flowmon::harness
