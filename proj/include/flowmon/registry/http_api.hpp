#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "flowmon/registry/registry.hpp"

namespace httplib {
class Server;
}

namespace flowmon::registry {

/// JSON-over-HTTP front end for a Registry.
///
///   POST   /auth/register                 {email, password}
///   POST   /auth/login                    {email, password}
///   GET    /activities/nearby?lat&lon&radius
///   GET    /activities/mine               (business)
///   POST   /activities                    {name, address, capacity, visibility?}
///   GET    /activities/{id}
///   PATCH  /activities/{id}               {name?, address?, capacity?, visibility?}
///   POST   /activities/{id}/otp
///   POST   /devices/associate             {device_id, otp}
///   DELETE /devices/{id}/association
///   GET    /activities/{id}/occupancy
///   GET    /activities/{id}/history?from&to
///
/// Errors are `{"error": text}` with 400/401/403/404/409.
class HttpApi {
 public:
  explicit HttpApi(Registry& registry);
  ~HttpApi();

  /// Binds and starts serving on a background thread; port 0 picks a free
  /// port. Throws ConfigError if the address cannot be bound.
  void start(const std::string& host, std::uint16_t port);
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  void routes();

  Registry& registry_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::uint16_t port_ = 0;
};

}  // namespace flowmon::registry
