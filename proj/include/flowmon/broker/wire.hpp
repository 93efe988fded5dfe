#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace flowmon::broker {

inline constexpr std::size_t kMaxPayloadBytes = 64 * 1024;

enum class FrameType { Connect, Connack, Reject, Sub, Suback, Pub, Puback, Ping, Pong };

std::string_view to_string(FrameType type);

/// One protocol frame. Only the fields of `type` are meaningful:
///   CONNECT{key, client_id}  CONNACK{}  REJECT{reason}  SUB{filter}
///   SUBACK{filter}  PUB{topic, mid, qos, payload}  PUBACK{mid}  PING{}  PONG{}
/// On the wire a frame is one JSON object per LF-terminated line, with the
/// frame type under "t" and keys in lexicographic order.
struct Frame {
  FrameType type = FrameType::Ping;
  std::string key;
  std::string client_id;
  std::string reason;
  std::string filter;
  std::string topic;
  std::string payload;
  std::uint32_t mid = 0;
  int qos = 0;

  static Frame connect(std::string key, std::string client_id);
  static Frame connack();
  static Frame reject(std::string reason);
  static Frame sub(std::string filter);
  static Frame suback(std::string filter);
  static Frame pub(std::string topic, std::uint32_t mid, int qos, std::string payload);
  static Frame puback(std::uint32_t mid);
  static Frame ping();
  static Frame pong();

  bool operator==(const Frame&) const = default;
};

/// Encoded line without the trailing LF.
std::string encode(const Frame& frame);

/// Throws ProtocolError on malformed JSON, unknown type, missing or
/// mistyped fields, qos outside {0,1} or oversize payload.
Frame decode(std::string_view line);

}  // namespace flowmon::broker
