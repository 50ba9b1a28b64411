#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "wsdo/json_io.hpp"

namespace wsdo {

enum class MessageType { hello, solve, result, ping, pong, error, shutdown };

std::string to_string(MessageType type);
MessageType message_type_from_string(const std::string& s); // throws ProtocolError

struct WireMessage {
  MessageType type = MessageType::ping;
  std::uint64_t msg_id = 0;
  json payload = json::object();

  bool operator==(const WireMessage&) const = default;
};

inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

// 4-byte big-endian body length, then the JSON body.
std::string encode_message(const WireMessage& msg);
// Parses one body (no prefix). Throws ProtocolError on malformed content.
WireMessage decode_body(std::string_view body);

struct DecodeResult {
  std::optional<WireMessage> message; // empty: need more data
  std::size_t consumed = 0;
};

// Decodes the first frame in `bytes` if it is complete. Throws FramingError
// when the prefix exceeds kMaxFrameBytes.
DecodeResult decode_message(std::string_view bytes);

// Incremental decoder for a byte stream arriving in arbitrary pieces.
class FrameDecoder {
public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  std::optional<WireMessage> next();
  std::size_t buffered() const { return buffer_.size(); }

private:
  std::string buffer_;
};

} // namespace wsdo
