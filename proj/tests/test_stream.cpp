#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "test_support.hpp"
#include "tmrt/stream.hpp"

using namespace tmrt;
namespace tst = tmrt::testing;

TEST_CASE("32-bit instruction header packs to the frozen word") {
  const Header h = InstructionHeader{true, 10, 200, 17000};
  const auto words = encode_header(h, 32);
  REQUIRE(words.size() == 1);
  CHECK(words[0] == 0x8AC84268u);
  CHECK(decode_header(words, 32) == h);
}

TEST_CASE("32-bit feature header packs to the frozen word") {
  const Header h = FeatureHeader{true, 784, 2};
  const auto words = encode_header(h, 32);
  REQUIRE(words.size() == 1);
  CHECK(words[0] == 0xC3100002u);
  CHECK(decode_header(words, 32) == h);
}

TEST_CASE("32-bit class field overflows at 64") {
  try {
    encode_header(InstructionHeader{true, 65, 1, 1}, 32);
    FAIL("expected header-overflow");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::HeaderOverflow);
  }
  CHECK_THROWS_AS(encode_header(InstructionHeader{true, 10, 300, 1}, 32),
                  TmError);
  CHECK_THROWS_AS(encode_header(InstructionHeader{true, 10, 20, 70000}, 32),
                  TmError);
  CHECK_THROWS_AS(encode_header(FeatureHeader{true, 20000, 1}, 32), TmError);
}

TEST_CASE("16-bit headers span extension words") {
  const Header ih = InstructionHeader{true, 10, 200, 1234};
  const auto iw = encode_header(ih, 16);
  REQUIRE(iw.size() == 3);
  CHECK(iw[0] == ((1u << 15) | 10));
  CHECK(iw[1] == 200);
  CHECK(iw[2] == 1234);
  CHECK(decode_header(iw, 16) == ih);

  const Header fh = FeatureHeader{false, 784, 3};
  const auto fw = encode_header(fh, 16);
  REQUIRE(fw.size() == 2);
  CHECK(fw[0] == ((1u << 14) | 784));
  CHECK(fw[1] == 3);
  CHECK(decode_header(fw, 16) == fh);

  // Counts beyond 14 bits cannot ride a 16-bit header.
  CHECK_THROWS_AS(encode_header(InstructionHeader{true, 10, 200, 17000}, 16),
                  TmError);
}

TEST_CASE("reserved-bit misuse in extension words is malformed") {
  auto words = encode_header(InstructionHeader{true, 1, 2, 3}, 16);
  words[1] |= 1u << 15;
  try {
    decode_header(words, 16);
    FAIL("expected malformed-header");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::MalformedHeader);
  }
}

TEST_CASE("64-bit reserved bits must be zero") {
  auto words = encode_header(InstructionHeader{true, 100, 5000, 1000000}, 64);
  REQUIRE(words.size() == 1);
  CHECK(decode_header(words, 64) == Header{InstructionHeader{true, 100, 5000,
                                                             1000000}});
  words[0] |= std::uint64_t{1} << 60;
  CHECK_THROWS_AS(decode_header(words, 64), TmError);
}

TEST_CASE("header encode/decode is a bijection over random valid headers") {
  std::mt19937_64 rng(61);
  const unsigned widths[] = {16, 32, 64};
  const std::uint32_t caps_instr[3][3] = {
      {0x3FFF, 0x3FFF, 0x3FFF}, {63, 255, 65535}, {4095, 65535, 0xFFFFFFFF}};
  const std::uint32_t caps_feat[3][2] = {
      {0x3FFF, 0x3FFF}, {16383, 65535}, {0xFFFFFFF, 0xFFFFFFFF}};
  for (int wi = 0; wi < 3; ++wi) {
    for (int rep = 0; rep < 3000; ++rep) {
      const bool newbit = rng() & 1;
      Header h;
      if (rng() & 1)
        h = InstructionHeader{newbit,
                              static_cast<std::uint32_t>(rng() % (std::uint64_t{caps_instr[wi][0]} + 1)),
                              static_cast<std::uint32_t>(rng() % (std::uint64_t{caps_instr[wi][1]} + 1)),
                              static_cast<std::uint32_t>(rng() % (std::uint64_t{caps_instr[wi][2]} + 1))};
      else
        h = FeatureHeader{newbit,
                          static_cast<std::uint32_t>(rng() % (std::uint64_t{caps_feat[wi][0]} + 1)),
                          static_cast<std::uint32_t>(rng() % (std::uint64_t{caps_feat[wi][1]} + 1))};
      CHECK(decode_header(encode_header(h, widths[wi]), widths[wi]) == h);
    }
  }
}

TEST_CASE("transpose example: two datapoints land in lanes 0 and 1") {
  const std::vector<BoolVector> dps = {{1, 0}, {0, 1}};
  const auto words = transpose_batch(dps);
  CHECK(words == std::vector<std::uint32_t>{0b01, 0b10});
}

TEST_CASE("transposition round-trips lanes to words to lanes") {
  std::mt19937_64 rng(67);
  for (int rep = 0; rep < 100; ++rep) {
    const std::uint32_t f = 1 + rng() % 40;
    const std::uint32_t n = 1 + rng() % 32;
    std::vector<BoolVector> dps;
    for (std::uint32_t i = 0; i < n; ++i)
      dps.push_back(tst::random_input(rng, f));
    const auto words = transpose_batch(dps);
    CHECK(extract_lanes(words, n) == dps);
  }
}

TEST_CASE("packetize rejects bad batches") {
  CHECK_THROWS_AS(packetize_features({}, false), TmError);
  CHECK_THROWS_AS(packetize_features({{1, 2}, {1}}, false), TmError);
  CHECK_THROWS_AS(make_feature_packet({}, false), TmError);
}

TEST_CASE("33 datapoints split into two batches, lane 0 only in the second") {
  std::vector<BoolVector> dps(33, BoolVector{1});
  const StreamPacket packet = make_feature_packet(dps, false);
  const auto& fh = std::get<FeatureHeader>(packet.header);
  CHECK(fh.words_per_batch == 1);
  CHECK(fh.batch_count == 2);
  REQUIRE(packet.payload.size() == 2);
  CHECK(packet.payload[0] == 0xFFFFFFFFu);
  CHECK(packet.payload[1] == 0x1u);
}

TEST_CASE("a packet stream is self-describing at every width") {
  std::mt19937_64 rng(71);
  for (unsigned width : {16u, 32u, 64u}) {
    for (int rep = 0; rep < 40; ++rep) {
      // Random mix of instruction and feature packets.
      std::vector<StreamPacket> packets;
      const int n = 1 + rng() % 5;
      for (int p = 0; p < n; ++p) {
        if (rng() & 1) {
          const std::uint32_t count = 1 + rng() % 40;
          StreamPacket pk;
          pk.header = InstructionHeader{
              (rng() & 1) != 0, static_cast<std::uint32_t>(1 + rng() % 10),
              static_cast<std::uint32_t>(1 + rng() % 100), count};
          for (std::uint32_t i = 0; i < count; ++i)
            pk.payload.push_back(rng() & 0xFFFF);
          packets.push_back(std::move(pk));
        } else {
          const std::uint32_t wpb = 1 + rng() % 20;
          const std::uint32_t batches = 1 + rng() % 4;
          StreamPacket pk;
          pk.header = FeatureHeader{(rng() & 1) != 0, wpb, batches};
          for (std::uint32_t i = 0; i < wpb * batches; ++i)
            pk.payload.push_back(static_cast<std::uint32_t>(rng()));
          packets.push_back(std::move(pk));
        }
      }
      // Flatten to untagged words, then re-parse with counts only.
      std::vector<std::uint64_t> flat;
      for (const auto& pk : packets)
        for (const StreamWord& w : serialize_packet(pk, width))
          flat.push_back(w.bits);
      StreamParser parser(width);
      std::vector<StreamPacket> parsed;
      for (std::uint64_t w : flat)
        if (auto pk = parser.push(w)) parsed.push_back(std::move(*pk));
      CHECK(parser.idle());
      REQUIRE(parsed.size() == packets.size());
      for (std::size_t i = 0; i < packets.size(); ++i) {
        CHECK(parsed[i].header == packets[i].header);
        CHECK(parsed[i].payload == packets[i].payload);
      }
    }
  }
}

TEST_CASE("stream file round trip") {
  std::mt19937_64 rng(73);
  const auto dir = std::filesystem::temp_directory_path() / "tmrt_stream_test";
  std::filesystem::create_directories(dir);
  for (unsigned width : {16u, 32u, 64u}) {
    StreamFile file;
    file.width = width;
    std::vector<BoolVector> dps;
    for (int i = 0; i < 40; ++i) dps.push_back(tst::random_input(rng, 12));
    file.packets.push_back(make_feature_packet(dps, false));
    const auto path = dir / ("f" + std::to_string(width) + ".tmf");
    save_stream_file(file, path);
    const StreamFile loaded = load_stream_file(path);
    CHECK(loaded.width == width);
    REQUIRE(loaded.packets.size() == 1);
    CHECK(loaded.packets[0].header == file.packets[0].header);
    CHECK(loaded.packets[0].payload == file.packets[0].payload);
  }
  CHECK_THROWS_AS(load_stream_file(dir / "missing.tmf"), TmError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("header width must be 16, 32 or 64") {
  CHECK_THROWS_AS(encode_header(FeatureHeader{true, 1, 1}, 24), TmError);
  CHECK_THROWS_AS(StreamParser(8), TmError);
}
