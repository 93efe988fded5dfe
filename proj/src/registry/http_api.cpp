#include "flowmon/registry/http_api.hpp"

#include <httplib.h>

#include <spdlog/spdlog.h>

#include "flowmon/common/errors.hpp"

namespace flowmon::registry {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::string bearer(const httplib::Request& req) {
  const std::string h = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (h.compare(0, prefix.size(), prefix) != 0) return {};
  return h.substr(prefix.size());
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw ApiError(ApiError::BadRequest, "body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ApiError(ApiError::BadRequest, std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ApiError(ApiError::BadRequest, std::string("missing field ") + key);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ApiError(ApiError::BadRequest, std::string("bad type for ") + key);
  }
}

double number_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) throw ApiError(ApiError::BadRequest, std::string("missing parameter ") + key);
  const std::string v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(key);
    return d;
  } catch (const std::exception&) {
    throw ApiError(ApiError::BadRequest, std::string("bad parameter ") + key);
  }
}

std::int64_t int_param(const httplib::Request& req, const char* key, std::int64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(key);
    return n;
  } catch (const std::exception&) {
    throw ApiError(ApiError::BadRequest, std::string("bad parameter ") + key);
  }
}

// Wraps a handler so ApiError becomes a status code.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ApiError& e) {
      reply(res, e.code(), {{"error", e.what()}});
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      reply(res, 500, {{"error", "internal error"}});
    }
  };
}

}  // namespace

HttpApi::HttpApi(Registry& registry) : registry_(registry), server_(std::make_unique<httplib::Server>()) {
  // The library default sets SO_REUSEPORT, which would let a second
  // registry silently share the port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  routes();
}

HttpApi::~HttpApi() { stop(); }

void HttpApi::routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS"}});
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Post("/auth/register", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json b = body_of(req);
    const std::string id = registry_.register_user(field<std::string>(b, "email"), field<std::string>(b, "password"));
    const auto u = registry_.user_by_email(field<std::string>(b, "email"));
    reply(res, 201, {{"user_id", id}, {"role", to_string(u->role)}});
  }));

  s.Post("/auth/login", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json b = body_of(req);
    const std::string token = registry_.login(field<std::string>(b, "email"), field<std::string>(b, "password"));
    const Session sess = registry_.authenticate(token);
    reply(res, 200, {{"token", token}, {"user_id", sess.user_id}, {"role", to_string(sess.role)},
                     {"expires_ms", sess.issued_ms + kTokenTtlMs}});
  }));

  s.Get("/activities/nearby", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto hits = registry_.list_nearby(number_param(req, "lat"), number_param(req, "lon"),
                                            number_param(req, "radius"));
    json list = json::array();
    for (const auto& h : hits) list.push_back(h.activity);
    reply(res, 200, {{"activities", list}});
  }));

  s.Get("/activities/mine", guarded([this](const httplib::Request& req, httplib::Response& res) {
    json list = json::array();
    for (const auto& a : registry_.my_activities(bearer(req))) list.push_back(owner_json(a));
    reply(res, 200, {{"activities", list}});
  }));

  s.Post("/activities", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string token = bearer(req);
    registry_.authenticate(token);
    const json b = body_of(req);
    std::optional<Visibility> vis;
    if (b.contains("visibility")) vis = visibility_from_json(b.at("visibility"));
    const Activity a = registry_.create_activity(token, field<std::string>(b, "name"), field<std::string>(b, "address"),
                                                 field<std::int64_t>(b, "capacity"), vis);
    reply(res, 201, owner_json(a));
  }));

  s.Get(R"(/activities/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, registry_.activity_view(req.matches[1], bearer(req)));
  }));

  s.Patch(R"(/activities/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string token = bearer(req);
    registry_.authenticate(token);
    reply(res, 200, owner_json(registry_.update_activity(token, req.matches[1], body_of(req))));
  }));

  s.Post(R"(/activities/([A-Za-z0-9_-]+)/otp)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const OtpGrant g = registry_.issue_otp(bearer(req), req.matches[1]);
    reply(res, 201, {{"otp", g.otp}, {"activity_id", g.activity_id}, {"issued_ms", g.issued_ms},
                     {"expires_ms", g.issued_ms + kOtpTtlMs}});
  }));

  s.Post("/devices/associate", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string token = bearer(req);
    registry_.authenticate(token);
    const json b = body_of(req);
    const std::string device = field<std::string>(b, "device_id");
    const Activity a = registry_.associate_device(token, device, field<std::string>(b, "otp"));
    reply(res, 200, {{"device_id", device}, {"activity_id", a.activity_id}, {"location_name", a.name}});
  }));

  s.Delete(R"(/devices/([A-Za-z0-9_-]+)/association)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             registry_.dissociate_device(bearer(req), req.matches[1]);
             reply(res, 200, {{"device_id", std::string(req.matches[1])}, {"associated", false}});
           }));

  s.Get(R"(/activities/([A-Za-z0-9_-]+)/occupancy)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const OccupancyView v = registry_.query_occupancy(req.matches[1], bearer(req));
          json j{{"activity_id", v.activity_id}, {"occupancy", v.occupancy}, {"as_of", v.as_of_ms}};
          j["capacity"] = v.capacity ? json(*v.capacity) : json(nullptr);
          reply(res, 200, j);
        }));

  s.Get(R"(/activities/([A-Za-z0-9_-]+)/history)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto points =
              registry_.query_history(bearer(req), req.matches[1], int_param(req, "from", 0),
                                      int_param(req, "to", std::numeric_limits<std::int64_t>::max()));
          json list = json::array();
          for (const auto& p : points) list.push_back({{"timestamp_ms", p.timestamp_ms}, {"occupancy", p.occupancy}});
          reply(res, 200, {{"activity_id", std::string(req.matches[1])}, {"points", list}});
        }));
}

void HttpApi::start(const std::string& host, std::uint16_t port) {
  int bound = 0;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else {
    bound = server_->bind_to_port(host, port) ? port : -1;
  }
  if (bound <= 0) throw ConfigError("cannot bind HTTP " + host + ":" + std::to_string(port));
  port_ = static_cast<std::uint16_t>(bound);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpApi::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace flowmon::registry
