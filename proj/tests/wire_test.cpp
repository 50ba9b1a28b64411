#include <string>

#include "doctest.h"
#include "wsdo/error.hpp"
#include "wsdo/rng.hpp"
#include "wsdo/wire.hpp"

using namespace wsdo;

namespace {

std::string random_string(Rng& rng) {
  static const std::vector<std::string> pieces{"a", "Z", "0", " ", "\"", "\\", "\n", "é", "ü", "→", "{", "]"};
  std::string s;
  const auto n = rng.below(12);
  for (std::uint64_t i = 0; i < n; ++i) s += pieces[rng.below(pieces.size())];
  return s;
}

json random_value(Rng& rng, int depth) {
  switch (depth > 3 ? rng.below(4) : rng.below(6)) {
  case 0: return rng.uniform() * 2e6 - 1e6;
  case 1: return static_cast<std::int64_t>(rng.next_u64() >> 12) - (std::int64_t{1} << 50);
  case 2: return random_string(rng);
  case 3: return rng.below(2) == 1;
  case 4: {
    json a = json::array();
    const auto n = rng.below(6);
    for (std::uint64_t i = 0; i < n; ++i) a.push_back(random_value(rng, depth + 1));
    return a;
  }
  default: {
    json o = json::object();
    const auto n = rng.below(5);
    for (std::uint64_t i = 0; i < n; ++i) o[random_string(rng)] = random_value(rng, depth + 1);
    return o;
  }
  }
}

WireMessage random_message(Rng& rng) {
  WireMessage m;
  m.type = static_cast<MessageType>(rng.below(7));
  m.msg_id = rng.next_u64() >> 1;
  m.payload = json::object();
  const auto n = rng.below(5);
  for (std::uint64_t i = 0; i < n; ++i) m.payload["k" + std::to_string(i)] = random_value(rng, 0);
  return m;
}

} // namespace

TEST_CASE("encode/decode round trip over randomized messages") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const WireMessage m = random_message(rng);
    const std::string bytes = encode_message(m);
    const auto r = decode_message(bytes);
    REQUIRE(r.message.has_value());
    CHECK(r.consumed == bytes.size());
    CHECK(*r.message == m);
  }
}

TEST_CASE("prefix is big-endian body length") {
  const std::string bytes = encode_message({MessageType::ping, 7, json::object()});
  const std::size_t body = bytes.size() - 4;
  CHECK(static_cast<unsigned char>(bytes[0]) == ((body >> 24) & 0xff));
  CHECK(static_cast<unsigned char>(bytes[3]) == (body & 0xff));
  CHECK(json::parse(bytes.substr(4)).at("type") == "PING");
}

TEST_CASE("a SOLVE with a 1000-element vector survives the trip") {
  std::vector<double> v;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) v.push_back(rng.uniform() * 1e3 - 500);
  const WireMessage m{MessageType::solve, 3, {{"targets", v}}};
  const auto back = decode_message(encode_message(m)).message;
  REQUIRE(back);
  CHECK(back->payload.at("targets").get<std::vector<double>>() == v);
}

TEST_CASE("truncated frames never yield a partial message") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::string bytes = encode_message(random_message(rng));
    for (std::size_t cut = 0; cut < bytes.size(); ++cut)
      CHECK_FALSE(decode_message(std::string_view(bytes).substr(0, cut)).message.has_value());
  }
}

TEST_CASE("incremental decoder reassembles byte-by-byte streams") {
  Rng rng(6);
  std::vector<WireMessage> sent;
  std::string stream;
  for (int i = 0; i < 50; ++i) {
    sent.push_back(random_message(rng));
    stream += encode_message(sent.back());
  }
  FrameDecoder d;
  std::vector<WireMessage> got;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    const std::size_t step = 1 + rng.below(40);
    d.feed(std::string_view(stream).substr(pos, step));
    pos += step;
    while (auto m = d.next()) got.push_back(*m);
  }
  CHECK(got == sent);
  CHECK(d.buffered() == 0);
}

TEST_CASE("framing and protocol errors") {
  std::string huge("\x04\x00\x00\x01", 4);
  CHECK_THROWS_AS(decode_message(huge), FramingError);
  FrameDecoder d;
  d.feed(huge);
  CHECK_THROWS_AS(d.next(), FramingError);

  auto frame = [](const std::string& body) {
    const auto n = static_cast<std::uint32_t>(body.size());
    std::string out{static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                    static_cast<char>(n)};
    return out + body;
  };
  CHECK_THROWS_AS(decode_message(frame("{not json")), ProtocolError);
  CHECK_THROWS_AS(decode_message(frame(R"({"type":"NOPE","msg_id":1})")), ProtocolError);
  CHECK_THROWS_AS(decode_message(frame(R"({"type":"PING"})")), ProtocolError);

  // A bad frame is consumed, so the next one still decodes.
  FrameDecoder s;
  s.feed(frame("[]") + encode_message({MessageType::pong, 2, json::object()}));
  CHECK_THROWS_AS(s.next(), ProtocolError);
  auto m = s.next();
  REQUIRE(m);
  CHECK(m->type == MessageType::pong);
}
