#include <doctest.h>

#include <sstream>

#include "flowmon/common/errors.hpp"
#include "flowmon/flow/crossing.hpp"
#include "flowmon/flow/emitter.hpp"
#include "flowmon/flow/flow_event.hpp"
#include "flowmon/flow/flow_meter.hpp"
#include "flowmon/flow/tracker.hpp"
#include "flowmon/sim/render.hpp"

using namespace flowmon;
using namespace flowmon::flow;

namespace {

Track track_through(std::initializer_list<double> rows) {
  Track t;
  std::int64_t ts = 0;
  for (double r : rows) t.append(ts += 100, {r, 12.0});
  return t;
}

std::vector<int> directions(const std::vector<Crossing>& cs) {
  std::vector<int> out;
  for (const auto& c : cs) out.push_back(c.direction);
  return out;
}

}  // namespace

TEST_CASE("zone boundaries") {
  CHECK(zone_of(0.0) == Zone::A);
  CHECK(zone_of(8.49) == Zone::A);
  CHECK(zone_of(8.5) == Zone::Mid);
  CHECK(zone_of(14.49) == Zone::Mid);
  CHECK(zone_of(14.5) == Zone::B);
  CHECK(zone_of(23.0) == Zone::B);
}

TEST_CASE("crossings fire on A to B and B to A only") {
  {
    auto t = track_through({2, 11, 20});
    CHECK(directions(detect_crossings(t)) == std::vector<int>{1});
  }
  {
    auto t = track_through({20, 11, 2});
    CHECK(directions(detect_crossings(t)) == std::vector<int>{-1});
  }
  {
    auto t = track_through({2, 11, 3, 10, 2});  // hovering at the line
    CHECK(detect_crossings(t).empty());
  }
  {
    auto t = track_through({11, 12, 20});  // born in MID: no side seen yet
    CHECK(detect_crossings(t).empty());
  }
  {
    auto t = track_through({2, 20, 2, 20});
    CHECK(directions(detect_crossings(t)) == std::vector<int>{1, -1, 1});
  }
}

TEST_CASE("hysteresis: jitter around the B boundary fires once") {
  Track t = track_through({2, 11});
  CHECK(detect_crossings(t).empty());
  std::vector<int> all;
  for (double r : {15.0, 14.0, 15.0, 14.0, 16.0}) {
    t.append(t.last().timestamp_ms + 100, {r, 12.0});
    for (int d : directions(detect_crossings(t))) all.push_back(d);
  }
  CHECK(all == std::vector<int>{1});
  // Back through MID to B again without touching A: still nothing.
  t.append(t.last().timestamp_ms + 100, {11.0, 12.0});
  t.append(t.last().timestamp_ms + 100, {20.0, 12.0});
  CHECK(detect_crossings(t).empty());
}

TEST_CASE("crossing timestamp is the frame that reached the far side") {
  auto t = track_through({2, 11, 20});
  const auto cs = detect_crossings(t);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].timestamp_ms == 300);
}

TEST_CASE("tracker: greedy association, gating and retirement") {
  Tracker tr;
  tr.associate({{2, 5}, {2, 18}}, 100);
  REQUIRE(tr.tracks().size() == 2);
  const auto a = tr.assignment();
  tr.associate({{4, 17}, {4, 6}}, 200);  // listed in swapped order
  CHECK(tr.assignment()[0] == a[1]);
  CHECK(tr.assignment()[1] == a[0]);

  tr.associate({{4, 6}, {4, 17 + 6.5}}, 300);  // second jumps beyond the gate
  CHECK(tr.assignment()[0] == a[0]);
  CHECK(tr.assignment()[1] != a[1]);
  CHECK(tr.tracks().size() == 3);

  // Old second track misses 300, 400, 500 and is gone after the third.
  tr.associate({{4, 6}, {4, 23.5}}, 400);
  CHECK(tr.tracks().size() == 3);
  tr.associate({{4, 6}, {4, 23.5}}, 500);
  CHECK(tr.tracks().size() == 2);
}

TEST_CASE("tracker keeps a bounded position history") {
  Tracker tr;
  for (int k = 1; k <= 400; ++k) tr.associate({{5.0, 5.0}}, k * 100);
  REQUIRE(tr.tracks().size() == 1);
  CHECK(tr.tracks()[0].positions.size() == kMaxTrackPositions);
  CHECK(tr.tracks()[0].last().timestamp_ms == 40000);
}

TEST_CASE("emitter numbers events and drops the oldest when full") {
  EventEmitter em("s1", 7, 3);
  const auto first = em.emit({{1, 10}, {-1, 20}});
  REQUIRE(first.size() == 2);
  CHECK(first[0] == FlowEvent{"s1", 7, 1, 10});
  CHECK(first[1] == FlowEvent{"s1", 8, -1, 20});
  em.emit({{1, 30}, {1, 40}});
  CHECK(em.queued() == 3);
  CHECK(em.dropped() == 1);
  const auto drained = em.drain();
  REQUIRE(drained.size() == 3);
  CHECK(drained.front().event_seq == 8);
  CHECK(drained.back().event_seq == 10);
  CHECK(em.queued() == 0);
}

TEST_CASE("event log round trip") {
  std::vector<FlowEvent> events{{"s1", 1, 1, 1000}, {"s1", 2, -1, 2000}, {"s2", 99, 1, 3000}};
  std::stringstream io;
  write_event_log(io, events);
  CHECK(read_event_log(io) == events);
  CHECK_THROWS_AS(parse_event_line("s1 1 0 1000"), InputError);
  CHECK_THROWS_AS(parse_event_line("s1 1 1"), InputError);
  CHECK_THROWS_AS(parse_event_line("s1 1 1 1000 x"), InputError);
}

TEST_CASE("flow meter counts one person walking each way") {
  sim::Scenario sc;
  sc.noise_sigma_c = 0.0;
  sc.duration_s = 30.0;
  sc.persons = {{2.0, sim::PathKind::Entry}, {15.0, sim::PathKind::Exit}};
  sim::Renderer r(sc);
  FlowMeter meter(sc.sensor_id);
  std::vector<FlowEvent> events;
  while (!r.done()) {
    for (const auto& e : meter.on_frame(r.next().frame)) events.push_back(e);
  }
  REQUIRE(events.size() == 2);
  CHECK(events[0].direction == 1);
  CHECK(events[1].direction == -1);
  CHECK(events[0].event_seq == 1);
  CHECK(events[1].event_seq == 2);
  const auto truth = sim::true_crossings(sc);
  REQUIRE(truth.size() == 2);
  // Events fire when the blob reaches the far zone, after the midline.
  CHECK(events[0].timestamp_ms >= truth[0].time_ms);
  CHECK(events[0].timestamp_ms - truth[0].time_ms < 2000);
}

TEST_CASE("flow meter ignores a loiterer") {
  sim::Scenario sc;
  sc.noise_sigma_c = 0.3;
  sc.duration_s = 60.0;
  sim::PersonScript p;
  p.enter_time_s = 2.0;
  p.path = sim::PathKind::Loiter;
  p.loiter_row = 3.5;
  p.loiter_s = 20.0;
  sc.persons = {p};
  sim::Renderer r(sc);
  FlowMeter meter(sc.sensor_id);
  std::size_t n = 0;
  while (!r.done()) n += meter.on_frame(r.next().frame).size();
  CHECK(n == 0);
}
