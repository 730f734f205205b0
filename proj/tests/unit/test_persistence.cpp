#include <doctest.h>

#include <atomic>
#include <cstring>
#include <functional>
#include <thread>
#include <random>

#include <json.hpp>

#include "oba/container.hpp"
#include "oba/error.hpp"
#include "oba/scene_json.hpp"
#include "oba/wav.hpp"
#include "support/random_scene.hpp"
#include "support/signals.hpp"

using namespace oba;
using namespace oba::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an oba::Error");
  return ErrorCode::invalid_argument;
}

// Little-endian RIFF/WAVE with an arbitrary format chunk.
std::vector<std::uint8_t> wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                    std::uint16_t bits, const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> out;
  auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  tag("RIFF");
  u32(static_cast<std::uint32_t>(4 + 8 + 16 + 8 + data.size()));
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  tag("data");
  u32(static_cast<std::uint32_t>(data.size()));
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

}  // namespace

TEST_CASE("scene JSON round trip on random scenes") {
  std::mt19937 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto scene = random_scene(rng);
    REQUIRE(validate_scene(scene).ok());
    const auto text = write_scene_json(scene);
    const auto back = read_scene_json(text);
    REQUIRE(back.warnings.empty());
    REQUIRE(back.scene == scene);
    REQUIRE(write_scene_json(back.scene) == text);
  }
}

TEST_CASE("scene JSON writes two-decimal dB values in a fixed field order") {
  std::mt19937 rng(5);
  auto scene = random_scene(rng);
  scene.components[0].default_gain = -3.14159;
  scene.presets[0].measured_loudness = -23.456;
  const auto json = nlohmann::ordered_json::parse(write_scene_json(scene));
  CHECK(json["components"][0]["default_gain_db"].get<double>() == -3.14);
  CHECK(json["presets"][0]["measured_loudness_lkfs"].get<double>() == -23.46);
  std::vector<std::string> keys;
  for (const auto& [k, _] : json.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"format", "version", "scene_id", "sample_rate", "frame_length",
                                         "default_preset_id", "components", "presets", "drc_profiles"});
}

TEST_CASE("scene JSON schema errors carry a JSON pointer") {
  std::mt19937 rng(6);
  auto json = nlohmann::json::parse(write_scene_json(random_scene(rng)));
  SUBCASE("empty presets") {
    json["presets"] = nlohmann::json::array();
    try {
      read_scene_json(json.dump());
      FAIL("expected schema-error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::schema_error);
      CHECK(e.path() == "/presets");
    }
  }
  SUBCASE("wrong type deep inside") {
    json["components"][0]["tracks"] = "zero";
    try {
      read_scene_json(json.dump());
      FAIL("expected schema-error");
    } catch (const Error& e) {
      CHECK(e.path() == "/components/0/tracks");
    }
  }
  SUBCASE("malformed text") { CHECK(code_of([] { read_scene_json("{\"scene_id\": "); }) == ErrorCode::schema_error); }
  SUBCASE("unknown fields are accepted with warnings") {
    json["vendor_extension"] = {{"x", 1}};
    json["presets"][0]["colour"] = "blue";
    const auto result = read_scene_json(json.dump());
    CHECK(result.warnings == std::vector<std::string>{"/presets/0/colour", "/vendor_extension"});
  }
}

TEST_CASE("gated component loudness survives as null") {
  std::mt19937 rng(8);
  auto scene = random_scene(rng);
  scene.components[0].loudness = LoudnessMeasurement{0.0, false};
  const auto json = nlohmann::json::parse(write_scene_json(scene));
  CHECK(json["components"][0]["loudness_lkfs"].is_null());
  CHECK(read_scene_json(json.dump()).scene.components[0].loudness == LoudnessMeasurement{0.0, false});
}

TEST_CASE("WAV float round trip is bit exact") {
  TempDir dir;
  const auto signal = to_float({white_noise(1, 0.5, 1000), white_noise(2, 0.5, 1000), white_noise(3, 0.5, 1000)});
  write_wav(dir.file("a.wav"), signal, 44100);
  const auto back = read_wav(dir.file("a.wav"));
  CHECK(back.sample_rate == 44100);
  CHECK(back.samples == signal);
}

TEST_CASE("WAV integer scaling") {
  SUBCASE("16 bit") {
    std::vector<std::uint8_t> data{0xFF, 0x7F, 0x00, 0x80, 0x00, 0x00};
    const auto wav = decode_wav(wav_bytes(1, 1, 48000, 16, data));
    CHECK(wav.samples.at(0, 0) == 32767.0f / 32768.0f);
    CHECK(wav.samples.at(0, 1) == -1.0f);
    CHECK(wav.samples.at(0, 2) == 0.0f);
  }
  SUBCASE("24 bit") {
    std::vector<std::uint8_t> data{0xFF, 0xFF, 0x7F, 0x00, 0x00, 0x80};
    const auto wav = decode_wav(wav_bytes(1, 1, 48000, 24, data));
    CHECK(wav.samples.at(0, 0) == static_cast<float>(8388607.0 / 8388608.0));
    CHECK(wav.samples.at(0, 1) == -1.0f);
  }
  SUBCASE("interleaved channels") {
    std::vector<std::uint8_t> data{0x00, 0x40, 0x00, 0xC0};
    const auto wav = decode_wav(wav_bytes(1, 2, 48000, 16, data));
    CHECK(wav.samples.channels() == 2);
    CHECK(wav.samples.at(0, 0) == 0.5f);
    CHECK(wav.samples.at(1, 0) == -0.5f);
  }
}

TEST_CASE("WAV errors") {
  CHECK(code_of([] { decode_wav(wav_bytes(2, 1, 48000, 4, {0, 0})); }) == ErrorCode::unsupported_wav);
  CHECK(code_of([] { decode_wav(wav_bytes(1, 1, 48000, 12, {0, 0})); }) == ErrorCode::unsupported_wav);
  CHECK(code_of([] { decode_wav({'R', 'I', 'F', 'F'}); }) == ErrorCode::malformed_wav);
  CHECK(code_of([] { read_wav("/nonexistent/file.wav"); }) == ErrorCode::io_error);
  std::mt19937 rng(3);
  const auto good = encode_wav(to_float({white_noise(4, 0.1, 64)}), 48000);
  for (int i = 0; i < 500; ++i) {
    auto bytes = good;
    bytes.resize(rng() % bytes.size());
    for (int k = 0; k < 3 && !bytes.empty(); ++k) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
    try {
      decode_wav(bytes);
    } catch (const Error&) {
    }
  }
}

TEST_CASE("container pack and unpack are lossless") {
  TempDir dir;
  std::mt19937 rng(11);
  auto scene = random_scene(rng);
  scene.sample_rate = 48000;
  std::vector<std::vector<double>> channels;
  for (std::size_t c = 0; c < std::max<std::size_t>(scene.track_span(), 2); ++c)
    channels.push_back(white_noise(static_cast<std::uint32_t>(c), 0.3, 5000));
  const auto pcm = to_float(channels);
  write_wav(dir.file("in.wav"), pcm, 48000);
  pack(scene, dir.file("in.wav"), dir.file("out.obas"));
  const auto unpacked = unpack(dir.file("out.obas"));
  CHECK(*unpacked.scene == scene);
  const auto all = unpacked.audio->read_all();
  REQUIRE(all.channels() == pcm.channels());
  const std::size_t padded = (5000 + scene.frame_length - 1) / scene.frame_length * scene.frame_length;
  REQUIRE(all.frames() == padded);
  for (std::size_t c = 0; c < pcm.channels(); ++c)
    for (std::size_t i = 0; i < all.frames(); ++i) {
      const float expected = i < 5000 ? pcm.at(c, i) : 0.0f;
      REQUIRE(std::memcmp(&all.at(c, i), &expected, sizeof(float)) == 0);
    }
}

TEST_CASE("container header layout") {
  std::mt19937 rng(12);
  auto scene = random_scene(rng);
  scene.sample_rate = 48000;
  scene.frame_length = 256;
  FloatBuffer pcm(scene.track_span(), 1000);
  const auto bytes = encode_container(scene, pcm, 48000);
  CHECK(std::memcmp(bytes.data(), "OBAS", 4) == 0);
  auto u32 = [&](std::size_t at) {
    return static_cast<std::uint32_t>(bytes[at] | bytes[at + 1] << 8 | bytes[at + 2] << 16 | bytes[at + 3] << 24);
  };
  CHECK(u32(4) == 1);
  CHECK(u32(8) == 48000);
  CHECK(u32(12) == scene.track_span());
  CHECK(u32(16) == 256);
  CHECK(u32(20) == 4);  // frame_count, low word
  const std::size_t json_length = u32(28);
  CHECK(bytes.size() == 36 + json_length + 4 * 256 * scene.track_span() * 4);
  const std::string json(bytes.begin() + 36, bytes.begin() + 36 + static_cast<std::ptrdiff_t>(json_length));
  CHECK(json == write_scene_json(scene));
}

TEST_CASE("container rejects foreign and damaged files") {
  std::mt19937 rng(13);
  auto scene = random_scene(rng);
  scene.sample_rate = 48000;
  const auto bytes = encode_container(scene, FloatBuffer(scene.track_span(), 2000), 48000);
  SUBCASE("RIFF file") {
    const auto wav = encode_wav(FloatBuffer(1, 100), 48000);
    CHECK(code_of([&] { ContainerReader::from_bytes(wav); }) == ErrorCode::not_a_container);
  }
  SUBCASE("future version") {
    auto b = bytes;
    b[4] = 2;
    CHECK(code_of([&] { ContainerReader::from_bytes(b); }) == ErrorCode::not_a_container);
  }
  SUBCASE("frame count inflated by one") {
    auto b = bytes;
    ++b[20];
    CHECK(code_of([&] { ContainerReader::from_bytes(b); }) == ErrorCode::container_corrupt);
  }
  SUBCASE("truncated payload") {
    auto b = bytes;
    b.pop_back();
    CHECK(code_of([&] { ContainerReader::from_bytes(b); }) == ErrorCode::container_corrupt);
  }
  SUBCASE("scene that does not fit the audio") {
    auto bad = scene;
    bad.sample_rate = 44100;
    CHECK(code_of([&] { encode_container(bad, FloatBuffer(scene.track_span(), 10), 48000); }) ==
          ErrorCode::invalid_scene);
  }
  SUBCASE("unstamped scene") {
    auto bad = scene;
    bad.presets[0].measured_loudness.reset();
    CHECK(code_of([&] { encode_container(bad, FloatBuffer(scene.track_span(), 10), 48000); }) ==
          ErrorCode::invalid_scene);
  }
}

TEST_CASE("container reads from several threads") {
  TempDir dir;
  std::mt19937 rng(14);
  auto scene = random_scene(rng);
  scene.sample_rate = 48000;
  scene.frame_length = 256;
  std::vector<std::vector<double>> channels;
  for (std::size_t c = 0; c < scene.track_span(); ++c)
    channels.push_back(white_noise(static_cast<std::uint32_t>(c + 50), 0.3, 256 * 64));
  const auto pcm = to_float(channels);
  write_container(dir.file("c.obas"), scene, pcm, 48000);
  const auto reader = ContainerReader::open(dir.file("c.obas"));
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      for (std::size_t f = static_cast<std::size_t>(t); f < 64; f += 4) {
        const auto frame = reader->read_frame(f);
        for (std::size_t c = 0; c < frame.channels(); ++c)
          for (std::size_t i = 0; i < 256; ++i)
            if (frame.at(c, i) != pcm.at(c, f * 256 + i)) ++mismatches;
      }
    });
  for (auto& t : threads) t.join();
  CHECK(mismatches == 0);
  CHECK(code_of([&] { reader->read_frame(64); }) == ErrorCode::eof);
}

TEST_CASE("container parser survives mutated input") {
  std::mt19937 rng(15);
  auto scene = random_scene(rng);
  scene.sample_rate = 48000;
  const auto good = encode_container(scene, FloatBuffer(scene.track_span(), 300), 48000);
  int rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    auto bytes = good;
    if (i % 3 == 0) bytes.resize(rng() % bytes.size());
    const int flips = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < flips && !bytes.empty(); ++k) {
      // Bias mutations towards the header and scene text.
      const std::size_t span = std::min<std::size_t>(bytes.size(), 36 + 400);
      bytes[rng() % span] = static_cast<std::uint8_t>(rng());
    }
    try {
      const auto reader = ContainerReader::from_bytes(bytes);
      for (std::size_t f = 0; f < reader->frame_count(); ++f) reader->read_frame(f);
    } catch (const Error&) {
      ++rejected;
    }
  }
  CHECK(rejected > 0);
}
