#include "flowmon/broker/wire.hpp"

#include <json.hpp>

#include "flowmon/common/errors.hpp"

namespace flowmon::broker {

using nlohmann::json;

std::string_view to_string(FrameType type) {
  switch (type) {
    case FrameType::Connect: return "CONNECT";
    case FrameType::Connack: return "CONNACK";
    case FrameType::Reject: return "REJECT";
    case FrameType::Sub: return "SUB";
    case FrameType::Suback: return "SUBACK";
    case FrameType::Pub: return "PUB";
    case FrameType::Puback: return "PUBACK";
    case FrameType::Ping: return "PING";
    case FrameType::Pong: return "PONG";
  }
  return "?";
}

Frame Frame::connect(std::string key, std::string client_id) {
  Frame f;
  f.type = FrameType::Connect;
  f.key = std::move(key);
  f.client_id = std::move(client_id);
  return f;
}
Frame Frame::connack() {
  Frame f;
  f.type = FrameType::Connack;
  return f;
}
Frame Frame::reject(std::string reason) {
  Frame f;
  f.type = FrameType::Reject;
  f.reason = std::move(reason);
  return f;
}
Frame Frame::sub(std::string filter) {
  Frame f;
  f.type = FrameType::Sub;
  f.filter = std::move(filter);
  return f;
}
Frame Frame::suback(std::string filter) {
  Frame f;
  f.type = FrameType::Suback;
  f.filter = std::move(filter);
  return f;
}
Frame Frame::pub(std::string topic, std::uint32_t mid, int qos, std::string payload) {
  Frame f;
  f.type = FrameType::Pub;
  f.topic = std::move(topic);
  f.mid = mid;
  f.qos = qos;
  f.payload = std::move(payload);
  return f;
}
Frame Frame::puback(std::uint32_t mid) {
  Frame f;
  f.type = FrameType::Puback;
  f.mid = mid;
  return f;
}
Frame Frame::ping() { return Frame{}; }
Frame Frame::pong() {
  Frame f;
  f.type = FrameType::Pong;
  return f;
}

std::string encode(const Frame& f) {
  json j = {{"t", to_string(f.type)}};
  switch (f.type) {
    case FrameType::Connect:
      j["key"] = f.key;
      j["client_id"] = f.client_id;
      break;
    case FrameType::Reject:
      j["reason"] = f.reason;
      break;
    case FrameType::Sub:
    case FrameType::Suback:
      j["filter"] = f.filter;
      break;
    case FrameType::Pub:
      j["topic"] = f.topic;
      j["mid"] = f.mid;
      j["qos"] = f.qos;
      j["payload"] = f.payload;
      break;
    case FrameType::Puback:
      j["mid"] = f.mid;
      break;
    case FrameType::Connack:
    case FrameType::Ping:
    case FrameType::Pong:
      break;
  }
  // Replace rather than throw on invalid UTF-8; decode rejects it instead.
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

namespace {

std::string get_string(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || !it->is_string()) {
    throw ProtocolError(std::string("missing string field '") + name + "'");
  }
  return it->get<std::string>();
}

std::uint32_t get_mid(const json& j) {
  const auto it = j.find("mid");
  if (it == j.end() || !it->is_number_unsigned() || it->get<std::uint64_t>() > UINT32_MAX) {
    throw ProtocolError("missing or invalid 'mid'");
  }
  return static_cast<std::uint32_t>(it->get<std::uint64_t>());
}

}  // namespace

Frame decode(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed frame: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("frame is not an object");
  const std::string t = get_string(j, "t");

  if (t == "CONNECT") return Frame::connect(get_string(j, "key"), get_string(j, "client_id"));
  if (t == "CONNACK") return Frame::connack();
  if (t == "REJECT") return Frame::reject(get_string(j, "reason"));
  if (t == "SUB") return Frame::sub(get_string(j, "filter"));
  if (t == "SUBACK") return Frame::suback(get_string(j, "filter"));
  if (t == "PUBACK") return Frame::puback(get_mid(j));
  if (t == "PING") return Frame::ping();
  if (t == "PONG") return Frame::pong();
  if (t == "PUB") {
    const auto q = j.find("qos");
    if (q == j.end() || !q->is_number_integer() || (q->get<int>() != 0 && q->get<int>() != 1)) {
      throw ProtocolError("qos must be 0 or 1");
    }
    std::string payload = get_string(j, "payload");
    if (payload.size() > kMaxPayloadBytes) throw ProtocolError("payload exceeds 64 KiB");
    return Frame::pub(get_string(j, "topic"), get_mid(j), q->get<int>(), std::move(payload));
  }
  throw ProtocolError("unknown frame type '" + t + "'");
}

}  // namespace flowmon::broker
