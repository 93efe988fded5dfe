#include <doctest.h>

#include <fstream>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "flowmon/coordinator/device.hpp"
#include "process.hpp"
#include "support.hpp"

using nlohmann::json;
using support::Process;
using support::run;

namespace {

const std::string kBin = FLOWMON_BIN;

// Port printed after `label` in a readiness line, e.g. "http 127.0.0.1:4242".
int port_after(const std::string& text, const std::string& label) {
  std::smatch m;
  const std::regex re(label + R"( [0-9.]+:(\d+))");
  if (!std::regex_search(text, m, re)) return -1;
  return std::stoi(m[1]);
}

json post(httplib::Client& cli, const std::string& path, const json& body, const std::string& token = {}) {
  httplib::Headers h;
  if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
  const auto r = cli.Post(path, h, body.dump(), "application/json");
  REQUIRE(r);
  INFO(r->body);
  REQUIRE(r->status / 100 == 2);
  return json::parse(r->body);
}

}  // namespace

TEST_CASE("scenario gen writes a scenario, frames and truth") {
  support::TempDir dir("cli-gen");
  const auto r = run({kBin, "scenario", "gen", "--passes", "6", "--seed", "3", "--noise", "0", "--duration", "90",
                      "--out", dir.file("sc.json"), "--frames", dir.file("sc.frames"), "--truth", dir.file("sc.truth")});
  CHECK(r.code == 0);
  CHECK(r.out.find("6 passes") != std::string::npos);
  std::ifstream frames(dir.file("sc.frames"));
  std::size_t lines = 0;
  for (std::string l; std::getline(frames, l);) ++lines;
  CHECK(lines == 900);
  std::ifstream truth(dir.file("sc.truth"));
  lines = 0;
  for (std::string l; std::getline(truth, l);) ++lines;
  CHECK(lines == 6);
}

TEST_CASE("usage and configuration errors have distinct exit codes") {
  support::TempDir dir("cli-err");
  CHECK(run({kBin}).code != 0);
  CHECK(run({kBin, "simulate", "--manifest", dir.file("none.json")}).code == 2);
  const auto r = run({kBin, "device", "--config", dir.file("none.json")});
  CHECK(r.code == 2);
  CHECK(r.err.find("configuration error") != std::string::npos);
}

TEST_CASE("broker prints a readiness line and refuses a taken port") {
  support::TempDir dir("cli-broker");
  REQUIRE(run({kBin, "add-device", "--whitelist", dir.file("wl.json"), "--device-id", "d1", "--out",
               dir.file("d1.json")})
              .code == 0);
  Process broker({kBin, "--log-level", "warn", "broker", "--listen", "127.0.0.1:0", "--whitelist",
                  dir.file("wl.json"), "--journal", dir.file("occ.journal")});
  REQUIRE(broker.wait_for("ready on", 10'000));
  const int port = port_after(broker.out(), "ready on");
  REQUIRE(port > 0);

  const auto clash = run({kBin, "broker", "--listen", "127.0.0.1:" + std::to_string(port), "--whitelist",
                          dir.file("wl.json")});
  CHECK(clash.code == 2);
  CHECK(clash.err.find("configuration error") != std::string::npos);

  // A device whose key the broker does not know is refused.
  auto settings = flowmon::coordinator::load_device_settings(dir.file("d1.json"));
  settings.device_key = "ffffffffffffffffffffffffffffffff";
  settings.broker = "127.0.0.1:" + std::to_string(port);
  flowmon::coordinator::save_device_settings(dir.file("ghost.json"), settings);
  const auto ghost = run({kBin, "device", "--config", dir.file("ghost.json")}, 30'000);
  CHECK(ghost.code == 3);
  CHECK(ghost.err.find("authorization error") != std::string::npos);

  broker.signal(SIGTERM);
  CHECK(broker.wait_exit(10'000) == 0);
  CHECK(std::filesystem::exists(dir.file("occ.journal.snapshot")));
}

TEST_CASE("registry, device and query work together over the network") {
  support::TempDir dir("cli-live");
  REQUIRE(run({kBin, "add-device", "--whitelist", dir.file("wl.json"), "--device-id", "door-1", "--out",
               dir.file("door-1.json")})
              .code == 0);
  Process reg({kBin, "--log-level", "warn", "registry", "--listen", "127.0.0.1:0", "--http", "127.0.0.1:0",
               "--whitelist", dir.file("wl.json"), "--journal", dir.file("occ.journal"), "--state",
               dir.file("registry.json"), "--business-email", "owner@museum.example", "--pbkdf2-iterations", "1000"});
  REQUIRE(reg.wait_for("ready", 10'000));
  const int broker_port = port_after(reg.out(), "broker");
  const int http_port = port_after(reg.out(), "http");
  REQUIRE(broker_port > 0);
  REQUIRE(http_port > 0);

  httplib::Client cli("127.0.0.1", http_port);
  post(cli, "/auth/register", {{"email", "owner@museum.example"}, {"password", "correct horse battery"}});
  const std::string token =
      post(cli, "/auth/login", {{"email", "owner@museum.example"}, {"password", "correct horse battery"}})["token"];
  const std::string act =
      post(cli, "/activities", {{"name", "Sala"}, {"address", "museo test, via prova 1"}, {"capacity", 30}},
           token)["activity_id"];
  const std::string otp = post(cli, "/activities/" + act + "/otp", json::object(), token)["otp"];
  post(cli, "/devices/associate", {{"device_id", "door-1"}, {"otp", otp}}, token);

  auto settings = flowmon::coordinator::load_device_settings(dir.file("door-1.json"));
  settings.broker = "127.0.0.1:" + std::to_string(broker_port);
  flowmon::coordinator::save_device_settings(dir.file("door-1.json"), settings);

  REQUIRE(run({kBin, "scenario", "gen", "--passes", "4", "--seed", "11", "--noise", "0", "--duration", "60", "--out",
               dir.file("sc.json")})
              .code == 0);
  const auto dev = run({kBin, "--log-level", "warn", "device", "--config", dir.file("door-1.json"), "--scenario",
                        dir.file("sc.json")},
                       60'000);
  INFO(dev.err);
  CHECK(dev.code == 0);
  CHECK(dev.out.find("provisioned: location '" + act + "' (Sala)") != std::string::npos);
  CHECK(dev.out.find("occupancy 0") != std::string::npos);

  const std::string where = "127.0.0.1:" + std::to_string(http_port);
  const auto q = run({kBin, "query", act, "--registry", where});
  CHECK(q.code == 0);
  CHECK(q.out.find("occupancy 0 capacity 30") != std::string::npos);
  CHECK(run({kBin, "query", "act-999", "--registry", where}).code == 1);

  const auto h = cli.Get("/activities/" + act + "/history", {{"Authorization", "Bearer " + token}});
  REQUIRE(h);
  CHECK(json::parse(h->body)["points"].size() == 4);

  reg.signal(SIGTERM);
  CHECK(reg.wait_exit(10'000) == 0);
  CHECK(run({kBin, "query", act, "--registry", where}, 20'000).code == 1);
}

TEST_CASE("simulate runs a manifest and writes the report") {
  support::TempDir dir("cli-sim");
  std::ofstream(dir.file("m.json")) << json{{"seed", 2}, {"days", 2}, {"passes_per_day", 6}, {"passes_spread", 0},
                                            {"duration_s", 120}, {"output_dir", "out"}, {"write_frames", false}}
                                           .dump();
  const auto r = run({kBin, "--log-level", "warn", "simulate", "--manifest", dir.file("m.json")}, 120'000);
  CHECK(r.code == 0);
  CHECK(r.out.find("median drift") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("out/report.jsonl")));
  CHECK(std::filesystem::exists(dir.file("out/report.txt")));
}
