#include "flowmon/registry/geo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "flowmon/common/errors.hpp"

namespace flowmon::registry {

namespace {

std::string key_of(const std::string& address) {
  std::string k;
  for (char c : address) k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto first = k.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = k.find_last_not_of(" \t");
  return k.substr(first, last - first + 1);
}

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

bool valid_geo(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && std::abs(p.lat) <= 90.0 && std::abs(p.lon) <= 180.0;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = rad(b.lat - a.lat);
  const double dlon = rad(b.lon - a.lon);
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(rad(a.lat)) * std::cos(rad(b.lat)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(s)));
}

StubGeocoder::StubGeocoder()
    : StubGeocoder({
          {"piazza del ferrarese, bari", {41.1287, 16.8730}},
          {"via sparano 1, bari", {41.1231, 16.8687}},
          {"lungomare nazario sauro, bari", {41.1205, 16.8820}},
          {"piazza duomo, milano", {45.4642, 9.1900}},
          {"piazza navona, roma", {41.8992, 12.4731}},
          {"museo test, via prova 1", {41.0000, 16.0000}},
      }) {}

StubGeocoder::StubGeocoder(std::map<std::string, GeoPoint> table) {
  for (auto& [addr, p] : table) add(addr, p);
}

StubGeocoder StubGeocoder::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open geocoder table " + path);
  StubGeocoder g(std::map<std::string, GeoPoint>{});
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [addr, v] : j.items()) {
      GeoPoint p{v.at(0).get<double>(), v.at(1).get<double>()};
      if (!valid_geo(p)) throw ConfigError("coordinates out of range for '" + addr + "'");
      g.add(addr, p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad geocoder table " + path + ": " + e.what());
  }
  return g;
}

void StubGeocoder::add(const std::string& address, GeoPoint p) { table_[key_of(address)] = p; }

std::optional<GeoPoint> StubGeocoder::operator()(const std::string& address) const {
  const auto it = table_.find(key_of(address));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

}  // namespace flowmon::registry
