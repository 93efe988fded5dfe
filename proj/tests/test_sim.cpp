#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "flowmon/common/errors.hpp"
#include "flowmon/flow/tracker.hpp"
#include "flowmon/sim/render.hpp"
#include "flowmon/sim/scenario.hpp"
#include "flowmon/sim/test_day.hpp"
#include "flowmon/thermal/pipeline.hpp"

using namespace flowmon;
using namespace flowmon::sim;

TEST_CASE("a rendered body integrates to peak * 2 pi sigma^2") {
  for (double sigma : {0.7, 0.9, 1.1}) {
    thermal::SensorGrid g;
    add_person(g, 3.5, 3.5, 8.0, sigma);
    double sum = 0;
    for (double v : g) sum += v;
    const double expect = 8.0 * 2.0 * std::numbers::pi * sigma * sigma;
    CHECK(std::abs(sum - expect) / expect < 0.01);
    CHECK(*std::max_element(g.begin(), g.end()) < 8.0);  // centre falls between cells
  }
  thermal::SensorGrid g;
  add_person(g, 3.0, 4.0, 8.0, 0.9);
  CHECK(g(3, 4) == doctest::Approx(8.0));
}

TEST_CASE("noise standard deviation matches sigma after quantization") {
  Scenario sc;
  sc.ambient_c = 22.0;
  sc.noise_sigma_c = 0.3;
  sc.duration_s = 60.0;
  Renderer r(sc);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  while (!r.done()) {
    for (double v : r.next().frame.cells) {
      sum += v - 22.0;
      sq += (v - 22.0) * (v - 22.0);
      ++n;
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  // Rounding to a 0.25 lattice adds q^2/12 of variance.
  const double expect = std::sqrt(0.3 * 0.3 + 0.25 * 0.25 / 12.0);
  CHECK(std::abs(sd - expect) / expect < 0.05);
  CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("rendering is deterministic per seed") {
  const auto a = make_test_day(10, 99, {.duration_s = 60.0});
  const auto b = make_test_day(10, 99, {.duration_s = 60.0});
  const auto c = make_test_day(10, 100, {.duration_s = 60.0});
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(to_json(a).dump() != to_json(c).dump());
  Renderer ra(a), rb(b);
  while (!ra.done()) REQUIRE(ra.next().frame == rb.next().frame);
}

TEST_CASE("test days are balanced, ordered and never negative") {
  CHECK(balanced_pass_count(42) == 42);
  CHECK(balanced_pass_count(41) == 42);
  CHECK(balanced_pass_count(0) == 0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DayOptions opt;
    const auto sc = make_test_day(42, seed, opt);
    validate(sc);
    const auto truth = true_crossings(sc);
    REQUIRE(truth.size() == 42);
    int occ = 0, entries = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      occ += truth[k].direction;
      entries += truth[k].direction > 0;
      CHECK(occ >= 0);
      if (k > 0) {
        const std::int64_t gap = truth[k].time_ms - truth[k - 1].time_ms;
        CHECK(gap >= static_cast<std::int64_t>(opt.min_headway_s * 1000) - 1);
      }
    }
    CHECK(occ == 0);
    CHECK(entries == 21);
    const std::int64_t first = truth.front().time_ms - sc.start_ms;
    const std::int64_t last = truth.back().time_ms - sc.start_ms;
    CHECK(first >= static_cast<std::int64_t>(opt.warmup_s * 1000));
    CHECK(last < static_cast<std::int64_t>(opt.duration_s * 1000));
  }
}

TEST_CASE("scenario files round trip and validate") {
  auto sc = make_test_day(6, 4, {.duration_s = 90.0});
  PersonScript loiter;
  loiter.path = PathKind::Loiter;
  loiter.enter_time_s = 5.0;
  sc.persons.push_back(loiter);
  const auto path = (std::filesystem::temp_directory_path() / "flowmon_test_scenario.json").string();
  save_scenario(sc, path);
  const auto back = load_scenario(path);
  CHECK(to_json(back).dump() == to_json(sc).dump());
  std::filesystem::remove(path);

  auto bad = sc;
  bad.persons[0].speed_mps = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = sc;
  bad.fps = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  CHECK_THROWS_AS(path_kind_from_string("teleport"), ConfigError);
}

TEST_CASE("ground truth file lists person, direction and time") {
  Scenario sc;
  sc.duration_s = 30.0;
  sc.persons = {{1.0, PathKind::Entry}, {10.0, PathKind::Exit}};
  std::ostringstream out;
  write_ground_truth(out, true_crossings(sc));
  std::istringstream in(out.str());
  int id = 0, dir = 0;
  long long t = 0;
  REQUIRE(static_cast<bool>(in >> id >> dir >> t));
  CHECK(id == 1);
  CHECK(dir == 1);
  REQUIRE(static_cast<bool>(in >> id >> dir >> t));
  CHECK(id == 2);
  CHECK(dir == -1);
}

TEST_CASE("tracker keeps identities across frames of separated walkers") {
  // Randomized scenes with 1-3 walkers. Each cluster is labelled with the
  // nearest true body. A scored frame is correct when every body labelled in
  // both it and the previous frame kept its track. Frames are scored when all
  // active bodies (on or just off the sensor) are pairwise >= 8 cells apart.
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> enter(3.0, 8.0), speed(0.8, 1.4), col(0.5, 6.5);
  std::bernoulli_distribution entry(0.5);
  std::size_t scored = 0, correct = 0;
  for (int scene = 0; scene < 40; ++scene) {
    Scenario sc;
    sc.seed = rng();
    sc.duration_s = 20.0;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
      PersonScript p;
      p.enter_time_s = enter(rng);
      p.path = entry(rng) ? PathKind::Entry : PathKind::Exit;
      p.speed_mps = speed(rng);
      p.col = col(rng);
      sc.persons.push_back(p);
    }
    Renderer r(sc);
    thermal::ThermalPipeline pipe;
    flow::Tracker tracker;
    std::map<int, std::uint64_t> previous;  // person -> track in the last frame
    for (std::uint64_t k = 0; !r.done(); ++k) {
      const auto rf = r.next();
      const auto clusters = pipe.process(rf.frame);
      std::vector<thermal::Point> cs;
      for (const auto& c : clusters) cs.push_back(c.centroid);
      tracker.associate(cs, rf.frame.timestamp_ms);

      const double t = static_cast<double>(k) / sc.fps;
      std::vector<thermal::Point> active;
      for (const auto& p : sc.persons) {
        const double local = t - p.enter_time_s;
        if (local < 0.0 || local > p.scene_time_s()) continue;
        double row = 0, c = 0;
        p.center_at(local, row, c);
        active.push_back({thermal::source_to_upscaled(row), thermal::source_to_upscaled(c)});
      }
      bool separated = true;
      for (std::size_t a = 0; a < active.size(); ++a)
        for (std::size_t b = a + 1; b < active.size(); ++b)
          if (std::hypot(active[a].row - active[b].row, active[a].col - active[b].col) < 8.0) separated = false;

      std::map<int, std::uint64_t> now;
      for (std::size_t i = 0; i < cs.size(); ++i) {
        int best = 0;
        double best_d = 4.0;
        for (const auto& p : rf.truth) {
          const double d = std::hypot(p.row - cs[i].row, p.col - cs[i].col);
          if (d < best_d) best_d = d, best = p.person_id;
        }
        if (best) now[best] = tracker.assignment()[i];
      }
      if (pipe.background().warmed_up() && separated && !now.empty()) {
        bool kept = true;
        for (const auto& [person, track] : now) {
          const auto it = previous.find(person);
          if (it != previous.end() && it->second != track) kept = false;
        }
        ++scored;
        correct += kept;
      }
      previous = std::move(now);
    }
  }
  REQUIRE(scored > 1000);
  CHECK(static_cast<double>(correct) / scored >= 0.95);
}
