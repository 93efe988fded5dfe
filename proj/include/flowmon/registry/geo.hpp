#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace flowmon::registry {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

bool valid_geo(const GeoPoint& p);

/// Great-circle distance in metres (haversine, mean Earth radius).
double haversine_m(const GeoPoint& a, const GeoPoint& b);
inline constexpr double kEarthRadiusM = 6'371'008.8;

/// address -> coordinates, or nullopt when the address cannot be resolved.
using Geocoder = std::function<std::optional<GeoPoint>(const std::string& address)>;

/// Fixed-table geocoder. Lookups ignore case and surrounding whitespace.
class StubGeocoder {
 public:
  StubGeocoder();  // built-in table
  explicit StubGeocoder(std::map<std::string, GeoPoint> table);

  /// Loads `{"address": [lat, lon], ...}`; throws ConfigError.
  static StubGeocoder from_file(const std::string& path);

  void add(const std::string& address, GeoPoint p);
  std::optional<GeoPoint> operator()(const std::string& address) const;

 private:
  std::map<std::string, GeoPoint> table_;
};

}  // namespace flowmon::registry
