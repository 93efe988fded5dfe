#include "flowmon/harness/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flowmon/common/errors.hpp"
#include "flowmon/harness/report.hpp"

namespace flowmon::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path);
  const fs::path base = fs::absolute(path).parent_path();
  RunManifest m;
  try {
    const json j = json::parse(in);
    m.seed = j.value("seed", m.seed);
    m.days = j.value("days", m.days);
    m.passes_per_day = j.value("passes_per_day", m.passes_per_day);
    m.passes_spread = j.value("passes_spread", m.passes_spread);
    m.day.duration_s = j.value("duration_s", m.day.duration_s);
    m.day.noise_sigma_c = j.value("noise_sigma_c", m.day.noise_sigma_c);
    m.day.min_headway_s = j.value("min_headway_s", m.day.min_headway_s);
    m.drop_probability = j.value("drop_probability", m.drop_probability);
    m.write_frames = j.value("write_frames", m.write_frames);
    m.output_dir = resolve(base, j.value("output_dir", std::string{}));
    for (const auto& s : j.value("scenarios", json::array())) m.scenarios.push_back(resolve(base, s.get<std::string>()));
    if (j.contains("external")) {
      const json& e = j.at("external");
      m.external.broker = e.at("broker").get<std::string>();
      m.external.registry = e.at("registry").get<std::string>();
      m.external.activity_id = e.at("activity_id").get<std::string>();
      m.external.device_config = resolve(base, e.at("device_config").get<std::string>());
      m.external.token = e.value("token", std::string{});
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad manifest " + path + ": " + e.what());
  }
  if (m.days < 0) throw ConfigError("days must be >= 0");
  if (m.passes_spread > m.passes_per_day) throw ConfigError("passes_spread exceeds passes_per_day");
  if (m.drop_probability < 0.0 || m.drop_probability >= 1.0) throw ConfigError("drop_probability must be in [0, 1)");
  for (const auto& s : m.scenarios) {
    if (!fs::exists(s)) throw ConfigError("scenario not found: " + s);
  }
  if (m.external.enabled() && !fs::exists(m.external.device_config)) {
    throw ConfigError("device config not found: " + m.external.device_config);
  }
  return m;
}

std::vector<sim::Scenario> manifest_scenarios(const RunManifest& m) {
  std::vector<sim::Scenario> out;
  if (!m.scenarios.empty()) {
    for (const auto& path : m.scenarios) out.push_back(sim::load_scenario(path));
    return out;
  }
  std::mt19937_64 rng(m.seed);
  std::uniform_int_distribution<std::int64_t> spread(-static_cast<std::int64_t>(m.passes_spread),
                                                     static_cast<std::int64_t>(m.passes_spread));
  for (int d = 0; d < m.days; ++d) {
    const std::int64_t n = static_cast<std::int64_t>(m.passes_per_day) + spread(rng);
    const std::uint64_t day_seed = rng();
    out.push_back(sim::make_test_day(static_cast<std::uint64_t>(n), day_seed, m.day));
  }
  return out;
}

RunResult run_manifest(const RunManifest& m, std::ostream* progress) {
  RunResult result;
  const auto scenarios = manifest_scenarios(m);
  if (!m.output_dir.empty()) fs::create_directories(m.output_dir);
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const int day = static_cast<int>(i) + 1;
    std::string prefix;
    if (!m.output_dir.empty() && m.write_frames) {
      char name[32];
      std::snprintf(name, sizeof name, "day_%02d", day);
      prefix = (fs::path(m.output_dir) / name).string();
    }
    DayReport r;
    try {
      if (m.external.enabled()) {
        r = run_day_external(scenarios[i], day, m.external, prefix);
      } else {
        DayRunOptions opt;
        opt.faults = {m.drop_probability, m.seed + static_cast<std::uint64_t>(day)};
        opt.artifact_prefix = prefix;
        r = run_day(scenarios[i], day, opt);
      }
    } catch (const std::exception& e) {
      r.day_index = day;
      r.complete = false;
      r.note = e.what();
    }
    result.days.push_back(r);
    if (progress) *progress << to_json(r).dump() << std::endl;
    if (!r.complete) {
      spdlog::error("day {} did not complete: {}", day, r.note);
      result.complete = false;
      break;
    }
  }
  if (!m.output_dir.empty()) {
    write_file(fs::path(m.output_dir) / "report.jsonl", report_jsonl(result.days));
    write_file(fs::path(m.output_dir) / "report.txt", report_table(result.days));
  }
  return result;
}

}  // namespace flowmon::harness
