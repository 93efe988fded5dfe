#include <doctest.h>

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <thread>

#include <json.hpp>

#include "flowmon/broker/client.hpp"
#include "flowmon/broker/core.hpp"
#include "flowmon/broker/occupancy.hpp"
#include "flowmon/broker/service.hpp"
#include "flowmon/broker/tcp.hpp"
#include "flowmon/broker/topic.hpp"
#include "flowmon/broker/transport.hpp"
#include "flowmon/broker/whitelist.hpp"
#include "flowmon/broker/wire.hpp"
#include "flowmon/common/clock.hpp"
#include "flowmon/common/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flowmon;
using namespace flowmon::broker;
using support::RecordingSink;
using support::of_type;

namespace {

const std::string kKeyA = "0123456789abcdef0123456789abcdef";
const std::string kKeyB = "fedcba9876543210fedcba9876543210";

DeviceRecord device(const std::string& id, const std::string& key, const std::string& location = "") {
  DeviceRecord r;
  r.device_id = id;
  r.keys = {key};
  r.location_id = location;
  r.location_name = location.empty() ? "" : "Room " + location;
  return r;
}

// Random topic of 1-4 levels over a tiny alphabet so matches are common.
std::string random_topic(std::mt19937_64& rng) {
  static const char* words[] = {"a", "b", "c", "dev-1", "x_y"};
  std::uniform_int_distribution<int> n(1, 4), w(0, 4);
  std::string out;
  const int count = n(rng);
  for (int i = 0; i < count; ++i) out += (i ? "/" : "") + std::string(words[w(rng)]);
  return out;
}

std::string random_filter(std::mt19937_64& rng) {
  auto levels = oracle::levels(random_topic(rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& l : levels)
    if (u(rng) < 0.3) l = "+";
  if (u(rng) < 0.3) {
    if (u(rng) < 0.5) levels.back() = "#";
    else levels.push_back("#");
  }
  std::string out;
  for (std::size_t i = 0; i < levels.size(); ++i) out += (i ? "/" : "") + levels[i];
  return out;
}

struct CoreFixture {
  ManualClock clock{1'000'000};
  Whitelist whitelist;
  BrokerCore core{whitelist, clock};

  CoreFixture() {
    whitelist.add_device(device("dev-a", kKeyA, "loc-1"));
    whitelist.add_device(device("dev-b", kKeyB, "loc-1"));
  }

  std::pair<SessionId, std::shared_ptr<RecordingSink>> session(const std::string& key) {
    auto sink = std::make_shared<RecordingSink>();
    const SessionId id = core.open(sink);
    core.on_line(id, encode(Frame::connect(key, "test")));
    return {id, sink};
  }
};

}  // namespace

TEST_CASE("topic validation") {
  CHECK(valid_topic("locations/loc-1/delta"));
  CHECK(valid_topic("a"));
  CHECK_FALSE(valid_topic(""));
  CHECK_FALSE(valid_topic("a//b"));
  CHECK_FALSE(valid_topic("/a"));
  CHECK_FALSE(valid_topic("a/"));
  CHECK_FALSE(valid_topic("a/+"));
  CHECK_FALSE(valid_topic("a/#"));
  CHECK_FALSE(valid_topic("a b"));
  CHECK(valid_filter("a/+/c"));
  CHECK(valid_filter("#"));
  CHECK(valid_filter("a/#"));
  CHECK_FALSE(valid_filter("a/#/b"));
  CHECK_FALSE(valid_filter("a+/b"));
  CHECK_FALSE(valid_filter("a/b#"));
}

TEST_CASE("topic matching edge cases") {
  CHECK(topic_matches("#", "a"));
  CHECK(topic_matches("a/#", "a"));
  CHECK(topic_matches("a/#", "a/b/c"));
  CHECK_FALSE(topic_matches("a/+", "a"));
  CHECK(topic_matches("+/+", "a/b"));
  CHECK_FALSE(topic_matches("+/+", "a/b/c"));
  CHECK_FALSE(topic_matches("a/b", "a/b/c"));
  CHECK(topic_matches("devices/+/hello", "devices/dev-1/hello"));
}

TEST_CASE("topic matcher agrees with recursive oracle on 1000 random pairs") {
  std::mt19937_64 rng(4242);
  int positives = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string f = random_filter(rng);
    const std::string t = random_topic(rng);
    REQUIRE(valid_filter(f));
    REQUIRE(valid_topic(t));
    const bool expected = oracle::topic_match(f, t);
    positives += expected;
    CHECK_MESSAGE(topic_matches(f, t) == expected, f << " vs " << t);
  }
  // Both outcomes must be exercised for the comparison to mean anything.
  CHECK(positives > 50);
  CHECK(positives < 950);
}

TEST_CASE("wire frames round trip") {
  const std::vector<Frame> frames = {
      Frame::connect(kKeyA, "c1"), Frame::connack(),        Frame::reject("auth: unknown key"),
      Frame::sub("a/#"),           Frame::suback("a/#"),    Frame::pub("a/b", 7, 1, "{\"x\":1}"),
      Frame::pub("a/b", 0, 0, ""), Frame::puback(4294967295u), Frame::ping(), Frame::pong()};
  for (const auto& f : frames) {
    const std::string line = encode(f);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(decode(line) == f);
  }
}

TEST_CASE("wire encoding has sorted keys") {
  CHECK(encode(Frame::pub("a/b", 3, 1, "p")) == R"({"mid":3,"payload":"p","qos":1,"t":"PUB","topic":"a/b"})");
  CHECK(encode(Frame::connect("k", "c")) == R"({"client_id":"c","key":"k","t":"CONNECT"})");
  CHECK(decode("{\"t\":\"PING\"}\r") == Frame::ping());
}

TEST_CASE("wire decode rejects malformed frames") {
  CHECK_THROWS_AS(decode("not json"), ProtocolError);
  CHECK_THROWS_AS(decode("[1,2]"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"t":"NOPE"})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"t":"SUB"})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"t":"SUB","filter":3})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"t":"PUB","topic":"a","mid":1,"qos":2,"payload":""})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"t":"PUB","topic":"a","mid":-1,"qos":1,"payload":""})"), ProtocolError);
  const std::string big(kMaxPayloadBytes + 1, 'x');
  CHECK_THROWS_AS(decode(encode(Frame::pub("a", 1, 1, big))), ProtocolError);
}

TEST_CASE("whitelist authenticates, rejects and round trips") {
  support::TempDir dir("wl");
  Whitelist wl;
  wl.add_device(device("dev-a", kKeyA));
  CHECK(wl.authenticate(kKeyA) == "dev-a");
  CHECK(wl.authenticate("0123456789ABCDEF0123456789ABCDEF") == "dev-a");
  CHECK_FALSE(wl.authenticate(kKeyB));
  CHECK_THROWS_AS(wl.add_device(device("dev-a", kKeyB)), ConfigError);
  CHECK_THROWS_AS(wl.add_device(device("dev-c", kKeyA)), ConfigError);
  CHECK_THROWS_AS(wl.add_device(device("dev-c", "abc")), ConfigError);

  wl.set_location("dev-a", "loc-9", "Hall");
  wl.save(dir.file("wl.json"));
  Whitelist back;
  back.load(dir.file("wl.json"));
  CHECK(back.devices() == wl.devices());

  wl.revoke(kKeyA);
  CHECK_FALSE(wl.authenticate(kKeyA));
  CHECK(wl.is_revoked(kKeyA));
}

TEST_CASE("whitelist rotation keeps the old key for the grace period") {
  Whitelist wl;
  wl.add_device(device("dev-a", kKeyA));
  const std::string fresh = wl.rotate("dev-a", 1000, 500);
  CHECK(fresh.size() == kKeyHexLength);
  CHECK(wl.authenticate(kKeyA) == "dev-a");
  CHECK(wl.authenticate(fresh) == "dev-a");
  CHECK(wl.expire(1499).empty());
  CHECK(wl.expire(1500) == std::vector<std::string>{kKeyA});
  CHECK_FALSE(wl.authenticate(kKeyA));
  CHECK(wl.authenticate(fresh) == "dev-a");

  SUBCASE("confirm ends the grace period early") {
    const std::string next = wl.rotate("dev-a", 2000);
    CHECK(wl.confirm_key("dev-a", next) == std::vector<std::string>{fresh});
    CHECK_FALSE(wl.authenticate(fresh));
  }
  CHECK_THROWS_AS(wl.rotate("nobody", 0), InputError);
}

TEST_CASE("core rejects unknown keys and frames before connect") {
  CoreFixture f;
  auto [id, sink] = f.session("ffffffffffffffffffffffffffffffff");
  auto frames = sink->take();
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].type == FrameType::Reject);
  CHECK(frames[0].reason == "auth: unknown key");
  CHECK(sink->closed());

  auto sink2 = std::make_shared<RecordingSink>();
  const SessionId s2 = f.core.open(sink2);
  f.core.on_line(s2, encode(Frame::sub("a/#")));
  CHECK(sink2->closed());
  CHECK(f.core.diagnostics().auth_rejections == 1);
  CHECK(f.core.diagnostics().protocol_errors == 1);

  auto sink3 = std::make_shared<RecordingSink>();
  const SessionId s3 = f.core.open(sink3);
  f.core.on_line(s3, "{garbage");
  CHECK(sink3->closed());
}

TEST_CASE("core enforces device topic access") {
  CoreFixture f;
  auto [a, sa] = f.session(kKeyA);
  auto [b, sb] = f.session(kKeyB);
  f.core.on_line(a, encode(Frame::sub("devices/#")));
  f.core.on_line(b, encode(Frame::sub("devices/#")));
  sa->take();
  sb->take();

  f.core.publish({"devices/dev-b/config/type", "{}", 1}, true);
  CHECK(of_type(sa->take(), FrameType::Pub).empty());
  CHECK(of_type(sb->take(), FrameType::Pub).size() == 1);

  // Own hello is allowed and routed.
  f.core.on_line(a, encode(Frame::pub("devices/dev-a/hello", 1, 1, "{}")));
  CHECK(of_type(sa->take(), FrameType::Puback).size() == 1);
  CHECK(of_type(sb->take(), FrameType::Pub).empty());

  SUBCASE("config topics are server-only") {
    f.core.on_line(a, encode(Frame::pub("devices/dev-a/config/type", 2, 1, "{}")));
    const auto frames = sa->take();
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].reason.rfind("forbidden", 0) == 0);
    CHECK(f.core.diagnostics().forbidden == 1);
  }
  SUBCASE("another device's hello is forbidden") {
    f.core.on_line(a, encode(Frame::pub("devices/dev-b/hello", 2, 1, "{}")));
    CHECK(sa->closed());
  }
}

TEST_CASE("retained messages only for config and key topics") {
  CHECK(BrokerCore::retainable("devices/d/config/type"));
  CHECK(BrokerCore::retainable("devices/d/key"));
  CHECK_FALSE(BrokerCore::retainable("devices/d/hello"));
  CHECK_FALSE(BrokerCore::retainable("locations/l/occupancy"));

  CoreFixture f;
  f.core.publish({"devices/dev-a/config/location", "v1", 1}, true);
  f.core.publish({"devices/dev-a/config/location", "v2", 1}, true);
  f.core.publish({"locations/loc-1/occupancy", "3", 1}, true);
  CHECK(f.core.retained("devices/dev-a/config/location")->payload == "v2");
  CHECK_FALSE(f.core.retained("locations/loc-1/occupancy"));

  auto [a, sa] = f.session(kKeyA);
  f.core.on_line(a, encode(Frame::sub("#")));
  const auto pubs = of_type(sa->take(), FrameType::Pub);
  REQUIRE(pubs.size() == 1);
  CHECK(pubs[0].payload == "v2");

  auto [b, sb] = f.session(kKeyB);
  f.core.on_line(b, encode(Frame::sub("#")));
  CHECK(of_type(sb->take(), FrameType::Pub).empty());
}

TEST_CASE("qos1 deliveries are retransmitted until acknowledged") {
  CoreFixture f;
  auto [a, sa] = f.session(kKeyA);
  f.core.on_line(a, encode(Frame::sub("locations/+/occupancy")));
  sa->take();
  f.core.publish({"locations/loc-1/occupancy", "p", 1});
  auto pubs = of_type(sa->take(), FrameType::Pub);
  REQUIRE(pubs.size() == 1);
  const std::uint32_t mid = pubs[0].mid;

  f.clock.advance(kRetransmitMs - 1);
  f.core.tick();
  CHECK(sa->take().empty());
  f.clock.advance(1);
  f.core.tick();
  pubs = of_type(sa->take(), FrameType::Pub);
  REQUIRE(pubs.size() == 1);
  CHECK(pubs[0].mid == mid);

  f.core.on_line(a, encode(Frame::puback(mid)));
  f.clock.advance(kRetransmitMs);
  f.core.tick();
  CHECK(sa->take().empty());
  CHECK(f.core.diagnostics().retransmissions == 1);

  SUBCASE("abandoned after the attempt limit") {
    f.core.publish({"locations/loc-1/occupancy", "q", 1});
    sa->take();
    for (int i = 0; i < kMaxDeliveryAttempts + 2; ++i) {
      f.clock.advance(kRetransmitMs);
      f.core.tick();
    }
    CHECK(of_type(sa->take(), FrameType::Pub).size() == static_cast<std::size_t>(kMaxDeliveryAttempts - 1));
    CHECK(f.core.diagnostics().deliveries_abandoned == 1);
  }
}

TEST_CASE("inflight limit closes a stalled subscriber") {
  CoreFixture f;
  auto [a, sa] = f.session(kKeyA);
  f.core.on_line(a, encode(Frame::sub("t/#")));
  for (std::size_t i = 0; i < kMaxInflight; ++i) f.core.publish({"t/x", "p", 1});
  CHECK_FALSE(sa->closed());
  f.core.publish({"t/x", "p", 1});
  CHECK(sa->closed());
  CHECK(f.core.diagnostics().inflight_overflows == 1);
  CHECK(f.core.session_count() == 0);
}

TEST_CASE("duplicate connect with the same key is re-acknowledged") {
  CoreFixture f;
  auto [a, sa] = f.session(kKeyA);
  sa->take();
  f.core.on_line(a, encode(Frame::connect(kKeyA, "test")));
  CHECK(of_type(sa->take(), FrameType::Connack).size() == 1);
  f.core.on_line(a, encode(Frame::connect(kKeyB, "test")));
  CHECK(sa->closed());
}

TEST_CASE("service provisions on hello and applies deltas before acknowledging") {
  ManualClock clock(5'000);
  BrokerService svc(clock);
  svc.whitelist().add_device(device("dev-a", kKeyA, "loc-1"));
  svc.whitelist().add_device(device("dev-b", kKeyB));
  svc.sync_locations();

  auto sink = std::make_shared<RecordingSink>();
  const SessionId a = svc.core().open(sink);
  svc.core().on_line(a, encode(Frame::connect(kKeyA, "a")));
  svc.core().on_line(a, encode(Frame::sub("devices/dev-a/config/+")));
  svc.core().on_line(a, encode(Frame::sub("locations/loc-1/occupancy")));
  sink->take();

  svc.core().on_line(a, encode(Frame::pub(hello_topic("dev-a"), 1, 1, "{}")));
  auto pubs = of_type(sink->take(), FrameType::Pub);
  std::set<std::string> topics;
  for (const auto& p : pubs) topics.insert(p.topic);
  CHECK(topics == std::set<std::string>{config_topic("dev-a", "type"), config_topic("dev-a", "location"),
                                        config_topic("dev-a", "constants")});
  CHECK(nlohmann::json::parse(svc.core().retained(config_topic("dev-a", "location"))->payload)["location_id"] ==
        "loc-1");

  const std::string delta = encode_delta({"s0", 1, +1, 6'000});
  svc.core().on_line(a, encode(Frame::pub(delta_topic("loc-1"), 2, 1, delta)));
  CHECK(svc.occupancy().state("loc-1")->occupancy == 1);
  const auto frames = sink->take();
  REQUIRE(frames.size() == 2);
  CHECK(frames[0].type == FrameType::Pub);
  CHECK(decode_occupancy(frames[0].payload).occupancy == 1);
  CHECK(frames[1] == Frame::puback(2));

  // Redelivery of the same event is acknowledged but not applied.
  svc.core().on_line(a, encode(Frame::pub(delta_topic("loc-1"), 2, 1, delta)));
  CHECK(svc.occupancy().state("loc-1")->occupancy == 1);
  CHECK(of_type(sink->take(), FrameType::Pub).empty());

  // A device may only move the counter of its own location.
  auto sb = std::make_shared<RecordingSink>();
  const SessionId b = svc.core().open(sb);
  svc.core().on_line(b, encode(Frame::connect(kKeyB, "b")));
  svc.core().on_line(b, encode(Frame::pub(delta_topic("loc-1"), 1, 1, encode_delta({"s9", 1, +1, 7'000}))));
  CHECK(svc.occupancy().state("loc-1")->occupancy == 1);

  // A bad payload is acknowledged and counted, not applied.
  svc.core().on_line(a, encode(Frame::pub(delta_topic("loc-1"), 3, 1, "{\"direction\":5}")));
  CHECK(svc.core().diagnostics().interceptor_failures == 1);
  CHECK(of_type(sink->take(), FrameType::Puback).size() == 1);
}

TEST_CASE("service key rotation publishes a retained key and drops the old key") {
  support::TempDir dir("rot");
  {
    Whitelist seed;
    seed.add_device(device("dev-a", kKeyA, "loc-1"));
    seed.save(dir.file("wl.json"));
  }
  ManualClock clock(0);
  BrokerOptions opts;
  opts.whitelist_path = dir.file("wl.json");
  BrokerService svc(clock, opts);

  auto s_old = std::make_shared<RecordingSink>();
  const SessionId old_id = svc.core().open(s_old);
  svc.core().on_line(old_id, encode(Frame::connect(kKeyA, "a")));
  svc.core().on_line(old_id, encode(Frame::sub(key_topic("dev-a"))));
  s_old->take();

  const std::string fresh = svc.rotate_key("dev-a");
  const auto pubs = of_type(s_old->take(), FrameType::Pub);
  REQUIRE(pubs.size() == 1);
  CHECK(nlohmann::json::parse(pubs[0].payload)["device_key"] == fresh);

  Whitelist on_disk;
  on_disk.load(dir.file("wl.json"));
  CHECK(on_disk.authenticate(fresh) == "dev-a");

  auto s_new = std::make_shared<RecordingSink>();
  const SessionId new_id = svc.core().open(s_new);
  svc.core().on_line(new_id, encode(Frame::connect(fresh, "a")));
  CHECK(s_old->closed());
  CHECK_FALSE(s_new->closed());

  auto s_stale = std::make_shared<RecordingSink>();
  const SessionId stale = svc.core().open(s_stale);
  svc.core().on_line(stale, encode(Frame::connect(kKeyA, "a")));
  const auto frames = s_stale->take();
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].reason == "auth: key revoked");

  svc.tick();
  Whitelist after;
  after.load(dir.file("wl.json"));
  CHECK(after.is_revoked(kKeyA));
}

TEST_CASE("occupancy store deduplicates and floors at zero") {
  OccupancyStore store;
  CHECK(store.apply("nowhere", "s", 1, 1, 0).status == ApplyResult::Status::UnknownLocation);
  store.add_location("L");
  CHECK(store.apply("L", "s", 1, +1, 10).state.occupancy == 1);
  CHECK(store.apply("L", "s", 1, +1, 11).status == ApplyResult::Status::Duplicate);
  CHECK(store.apply("L", "t", 1, +1, 12).state.occupancy == 2);
  CHECK(store.apply("L", "s", 2, -1, 13).state.occupancy == 1);
  CHECK(store.apply("L", "s", 3, -1, 14).state.occupancy == 0);
  const auto r = store.apply("L", "s", 4, -1, 15);
  CHECK(r.underflow);
  CHECK(r.state.occupancy == 0);
  CHECK(r.state.anomaly_underflow == 1);
  CHECK(r.state.applied_events == 5);
  CHECK_THROWS_AS(store.apply("L", "s", 5, 0, 16), InputError);
  CHECK_THROWS_AS(store.apply("L", "a b", 5, 1, 16), InputError);

  const auto h = store.history("L", 11, 14);
  REQUIRE(h.size() == 3);
  CHECK(h[0] == HistoryPoint{12, 2});
  CHECK(h[2] == HistoryPoint{14, 0});
}

TEST_CASE("occupancy never goes negative over 10000 fuzzed streams") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 60);
  std::bernoulli_distribution exit_bias(0.6), dup(0.2);
  std::size_t underflow_streams = 0;
  for (int s = 0; s < 10'000; ++s) {
    OccupancyStore store;
    store.add_location("L");
    std::int64_t expected = 0;
    std::uint64_t expected_anomalies = 0;
    std::vector<std::pair<std::uint64_t, int>> sent;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      std::pair<std::uint64_t, int> ev;
      if (!sent.empty() && dup(rng)) {
        ev = sent[std::uniform_int_distribution<std::size_t>(0, sent.size() - 1)(rng)];
      } else {
        ev = {static_cast<std::uint64_t>(sent.size() + 1), exit_bias(rng) ? -1 : +1};
        sent.push_back(ev);
        if (ev.second < 0 && expected == 0) ++expected_anomalies;
        else expected += ev.second;
      }
      const auto r = store.apply("L", "s", ev.first, ev.second, i);
      REQUIRE(r.state.occupancy >= 0);
    }
    const auto st = *store.state("L");
    REQUIRE(st.occupancy == expected);
    REQUIRE(st.anomaly_underflow == expected_anomalies);
    underflow_streams += expected_anomalies > 0;
  }
  CHECK(underflow_streams > 1000);
}

TEST_CASE("occupancy journal recovers state, dedup set and history") {
  support::TempDir dir("occ");
  const std::string journal = dir.file("occ.journal");
  std::string before;
  {
    OccupancyStore store(journal);
    store.add_location("L");
    store.add_location("M");
    for (std::uint64_t i = 1; i <= 20; ++i) store.apply(i % 3 ? "L" : "M", "s", i, i % 4 == 0 ? -1 : +1, 100 * i);
    store.apply("L", "s", 21, -1, 2100);
    before = store.dump();
  }
  OccupancyStore back(journal);
  CHECK(back.dump() == before);
  CHECK(back.apply("L", "s", 5, +1, 9999).status == ApplyResult::Status::Duplicate);
  CHECK(back.history("L", 0, 10'000).size() == 15);

  SUBCASE("torn final line is discarded and truncated") {
    const std::string clean = back.dump();
    { std::ofstream(journal, std::ios::app) << "L s 22 1 22"; }
    {
      OccupancyStore torn(journal);
      CHECK(torn.dump() == clean);
      torn.apply("L", "s", 23, +1, 2300);
    }
    OccupancyStore again(journal);
    CHECK(again.state("L")->occupancy == back.state("L")->occupancy + 1);
  }
}

TEST_CASE("occupancy snapshot covers a journal prefix") {
  support::TempDir dir("snap");
  const std::string journal = dir.file("occ.journal");
  std::string expected;
  {
    OccupancyStore store(journal);
    store.add_location("L");
    for (std::uint64_t i = 1; i <= 10; ++i) store.apply("L", "s", i, +1, i);
    store.write_snapshot();
    for (std::uint64_t i = 11; i <= 15; ++i) store.apply("L", "s", i, -1, i);
    expected = store.dump();
  }
  std::ifstream snap(journal + ".snapshot");
  std::string header;
  std::getline(snap, header);
  CHECK(header == "#journal_lines 10");
  OccupancyStore back(journal);
  CHECK(back.dump() == expected);

  SUBCASE("a snapshot that contradicts the journal is an error") {
    { std::ofstream(journal + ".snapshot", std::ios::trunc) << "#journal_lines 10\nL 3 10\n"; }
    CHECK_THROWS_AS(OccupancyStore{journal}, ConfigError);
  }
}

TEST_CASE("client over memory link connects, subscribes and survives loss") {
  ManualClock clock(0);
  BrokerService svc(clock);
  svc.whitelist().add_device(device("dev-a", kKeyA, "loc-1"));
  svc.sync_locations();
  auto link = std::make_shared<MemoryLink>(svc.core(), LinkFaults{0.3, 7});
  BrokerClient client(link, clock, {"a", kKeyA});
  std::vector<std::string> received;
  std::set<std::uint32_t> acked;
  client.on_message([&](const std::string& t, const std::string&) { received.push_back(t); });
  client.on_ack([&](std::uint32_t mid) { acked.insert(mid); });
  client.subscribe("locations/loc-1/occupancy");
  client.connect();

  std::set<std::uint32_t> mids;
  for (std::uint64_t i = 1; i <= 30; ++i) mids.insert(client.publish(delta_topic("loc-1"), encode_delta({"s", i, +1, 0})));
  for (int step = 0; step < 2000 && (client.pending_count() || client.state() != BrokerClient::State::Connected);
       ++step) {
    link->pump();
    clock.advance(500);
    client.tick();
    svc.tick();
  }
  CHECK(client.pending_count() == 0);
  CHECK(acked == mids);
  CHECK(svc.occupancy().state("loc-1")->occupancy == 30);
  CHECK(link->dropped() > 0);
}

TEST_CASE("client rejection is terminal") {
  ManualClock clock(0);
  Whitelist wl;
  BrokerCore core(wl, clock);
  auto link = std::make_shared<MemoryLink>(core);
  BrokerClient client(link, clock, {"x", kKeyA});
  client.connect();
  link->pump();
  CHECK(client.state() == BrokerClient::State::Rejected);
  CHECK(client.reject_reason() == "auth: unknown key");
  clock.advance(60'000);
  client.tick();
  link->pump();
  CHECK(client.state() == BrokerClient::State::Rejected);
}

TEST_CASE("client backs off while the broker is unreachable") {
  ManualClock clock(0);
  Whitelist wl;
  wl.add_device(device("dev-a", kKeyA));
  BrokerCore core(wl, clock);
  auto link = std::make_shared<MemoryLink>(core);
  link->set_reachable(false);
  BrokerClient client(link, clock, {"a", kKeyA});
  client.connect();
  CHECK(client.state() == BrokerClient::State::Backoff);
  clock.advance(999);
  client.tick();
  CHECK(client.state() == BrokerClient::State::Backoff);
  link->set_reachable(true);
  clock.advance(1);
  client.tick();
  link->pump();
  CHECK(client.state() == BrokerClient::State::Connected);
}

TEST_CASE("tcp server and client exchange messages") {
  SystemClock clock;
  BrokerService svc(clock);
  svc.whitelist().add_device(device("dev-a", kKeyA, "loc-1"));
  svc.sync_locations();
  TcpBrokerServer server(svc.core(), [&] { svc.tick(); }, 20);
  server.start({"127.0.0.1", 0});
  REQUIRE(server.port() != 0);

  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::string> payloads;
  auto transport = std::make_shared<TcpClientTransport>(Endpoint{"127.0.0.1", server.port()});
  BrokerClient client(transport, clock, {"a", kKeyA});
  client.on_message([&](const std::string&, const std::string& p) {
    std::lock_guard lock(mu);
    payloads.push_back(p);
    cv.notify_all();
  });
  client.subscribe(occupancy_topic("loc-1"));
  client.connect();
  for (int i = 0; i < 200 && !client.subscribed(occupancy_topic("loc-1")); ++i) {
    client.tick();
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  REQUIRE(client.subscribed(occupancy_topic("loc-1")));
  client.publish(delta_topic("loc-1"), encode_delta({"s", 1, +1, 42}));
  {
    std::unique_lock lock(mu);
    cv.wait_for(lock, std::chrono::seconds(5), [&] { return !payloads.empty(); });
    REQUIRE(payloads.size() == 1);
    CHECK(decode_occupancy(payloads[0]).occupancy == 1);
  }

  TcpBrokerServer clash(svc.core(), [] {});
  CHECK_THROWS_AS(clash.start({"127.0.0.1", server.port()}), ConfigError);

  client.disconnect();
  server.stop();
}

TEST_CASE("endpoint parsing") {
  const auto e = parse_endpoint("0.0.0.0:1883");
  CHECK(e.host == "0.0.0.0");
  CHECK(e.port == 1883);
  CHECK_THROWS_AS(parse_endpoint("nohost"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("h:abc"), ConfigError);
}
