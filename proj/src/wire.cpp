#include "wsdo/wire.hpp"

#include <array>

#include "wsdo/error.hpp"

namespace wsdo {

namespace {

constexpr std::array<std::pair<MessageType, const char*>, 7> kNames{{
    {MessageType::hello, "HELLO"},
    {MessageType::solve, "SOLVE"},
    {MessageType::result, "RESULT"},
    {MessageType::ping, "PING"},
    {MessageType::pong, "PONG"},
    {MessageType::error, "ERROR"},
    {MessageType::shutdown, "SHUTDOWN"},
}};

std::uint32_t read_prefix(std::string_view bytes) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[0])) << 24 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[1])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[2])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[3]));
}

} // namespace

std::string to_string(MessageType type) {
  for (const auto& [t, name] : kNames)
    if (t == type) return name;
  return "?";
}

MessageType message_type_from_string(const std::string& s) {
  for (const auto& [t, name] : kNames)
    if (s == name) return t;
  throw ProtocolError("unknown message type " + s);
}

std::string encode_message(const WireMessage& msg) {
  const json body = {{"type", to_string(msg.type)}, {"msg_id", msg.msg_id}, {"payload", msg.payload}};
  const std::string text = body.dump();
  if (text.size() > kMaxFrameBytes) throw FramingError("message body exceeds 64 MiB");
  const auto n = static_cast<std::uint32_t>(text.size());
  std::string out;
  out.reserve(4 + text.size());
  out.push_back(static_cast<char>(n >> 24));
  out.push_back(static_cast<char>(n >> 16 & 0xff));
  out.push_back(static_cast<char>(n >> 8 & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += text;
  return out;
}

WireMessage decode_body(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("invalid JSON body: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j.contains("msg_id") || !j["type"].is_string() ||
      !j["msg_id"].is_number_unsigned())
    throw ProtocolError("message body lacks type or msg_id");
  WireMessage m;
  m.type = message_type_from_string(j["type"].get<std::string>());
  m.msg_id = j["msg_id"].get<std::uint64_t>();
  m.payload = j.value("payload", json::object());
  return m;
}

DecodeResult decode_message(std::string_view bytes) {
  if (bytes.size() < 4) return {};
  const std::uint32_t n = read_prefix(bytes);
  if (n > kMaxFrameBytes) throw FramingError("frame length " + std::to_string(n) + " exceeds 64 MiB");
  if (bytes.size() < 4 + static_cast<std::size_t>(n)) return {};
  return {decode_body(bytes.substr(4, n)), 4 + static_cast<std::size_t>(n)};
}

std::optional<WireMessage> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const std::uint32_t n = read_prefix(buffer_);
  if (n > kMaxFrameBytes) throw FramingError("frame length " + std::to_string(n) + " exceeds 64 MiB");
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  // Drop the frame before parsing so a bad body does not wedge the stream.
  const std::string body = buffer_.substr(4, n);
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  return decode_body(body);
}

} // namespace wsdo
