#include <doctest.h>

#include <cmath>
#include <random>

#include "oba/authoring.hpp"
#include "oba/error.hpp"
#include "oba/panning.hpp"
#include "oba/render.hpp"
#include "support/signals.hpp"

using namespace oba;
using namespace oba::testing;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752;

RenderSettings plain() {
  RenderSettings s;
  s.loudness_compensation = false;
  s.drc = false;
  return s;
}

ComponentGroup object(std::string id, std::size_t track, double azimuth = 0.0) {
  ComponentGroup c;
  c.component_id = std::move(id);
  c.labels = make_labels(c.component_id);
  c.tracks = {track};
  c.geometry = ObjectGeometry{{azimuth, 0.0, 1.0}};
  c.interactivity.gain_min = -9;
  c.interactivity.gain_max = 9;
  c.interactivity.azimuth_range = 180;
  c.interactivity.elevation_max = 30;
  c.interactivity.on_off_allowed = true;
  return c;
}

ComponentGroup bed(std::string id, std::vector<std::size_t> tracks, LayoutId layout) {
  ComponentGroup c;
  c.component_id = std::move(id);
  c.labels = make_labels(c.component_id);
  c.content_kind = ContentKind::mixed_bed;
  c.tracks = std::move(tracks);
  c.geometry = BedGeometry{layout};
  return c;
}

// One preset holding every component.
std::shared_ptr<AudioScene> single_preset_scene(std::vector<ComponentGroup> components) {
  auto scene = std::make_shared<AudioScene>();
  scene->scene_id = "test";
  Preset p;
  p.preset_id = "main";
  p.labels = make_labels("Main");
  for (auto& c : components) p.members.push_back({c.component_id, 0.0, std::nullopt, std::nullopt});
  scene->components = std::move(components);
  scene->presets = {p};
  scene->default_preset_id = "main";
  return scene;
}

DoubleBuffer render(std::shared_ptr<const AudioScene> scene, const FloatBuffer& pcm, UserState user = {},
                    RenderSettings settings = plain()) {
  return render_offline(scene, memory_source(pcm), user, settings).signal;
}

}  // namespace

TEST_CASE("centre object on stereo splits at -3 dB") {
  const auto x = white_noise(1, 0.2, 4096);
  const auto pcm = to_float({x});
  const auto out = render(single_preset_scene({object("voice", 0)}), pcm);
  REQUIRE(out.channels() == 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double expected = static_cast<double>(pcm.at(0, i)) * kInvSqrt2;
    REQUIRE(std::abs(out.at(0, i) - expected) <= 1e-15);
    REQUIRE(std::abs(out.at(1, i) - expected) <= 1e-15);
  }
}

TEST_CASE("muted member contributes exact zeros") {
  const auto pcm = to_float({white_noise(2, 0.2, 4096), white_noise(3, 0.2, 4096)});
  auto scene = single_preset_scene({object("a", 0, 20), object("b", 1, -20)});
  UserState user;
  user.muted = {"b"};
  const auto both = render(scene, pcm, user);
  const auto only_a = render(scene, to_float({white_noise(2, 0.2, 4096), std::vector<double>(4096)}));
  CHECK(both == only_a);
  user.muted = {"a", "b"};
  const auto none = render(scene, pcm, user);
  for (double v : none.raw()) REQUIRE(v == 0.0);
}

TEST_CASE("rendering is linear in each component signal") {
  std::mt19937 rng(9);
  auto scene = single_preset_scene({object("a", 0, 45), object("b", 1, -100), bed("bed", {2, 3}, LayoutId::stereo_2_0)});
  for (auto layout : {LayoutId::mono_1_0, LayoutId::stereo_2_0, LayoutId::surround_5_1}) {
    UserState user;
    user.target_layout = layout;
    user.gain_offsets = {{"a", 3.5}};
    const auto s1 = white_noise(static_cast<std::uint32_t>(rng()), 0.04, 4096);
    const auto s2 = white_noise(static_cast<std::uint32_t>(rng()), 0.04, 4096);
    const std::vector<double> zero(4096);
    const auto full = render(scene, to_float({s1, s2, s1, s2}), user);
    const auto part1 = render(scene, to_float({s1, zero, s1, zero}), user);
    const auto part2 = render(scene, to_float({zero, s2, zero, s2}), user);
    for (std::size_t k = 0; k < full.raw().size(); ++k)
      REQUIRE(std::abs(full.raw()[k] - (part1.raw()[k] + part2.raw()[k])) <= 1e-12);
  }
}

TEST_CASE("renders are deterministic") {
  auto scene = single_preset_scene({object("a", 0, 45), bed("bed", {1, 2}, LayoutId::stereo_2_0)});
  const auto pcm = to_float({white_noise(4, 0.3, 20000), white_noise(5, 0.3, 20000), white_noise(6, 0.3, 20000)});
  UserState user;
  user.gain_offsets = {{"a", 4}};
  user.drc_profile = "noisy-environment";
  RenderSettings settings;
  const auto a = render(scene, pcm, user, settings);
  const auto b = render(scene, pcm, user, settings);
  CHECK(a == b);
}

TEST_CASE("silence renders silence with invalid loudness") {
  auto scene = single_preset_scene({object("a", 0)});
  const auto result = render_offline(scene, memory_source(FloatBuffer(1, 48000)), {}, plain());
  for (double v : result.signal.raw()) REQUIRE(v == 0.0);
  CHECK_FALSE(result.stats.integrated_loudness.valid);
}

TEST_CASE("5.1 bed follows the downmix matrix on stereo") {
  std::vector<std::vector<double>> channels;
  for (std::uint32_t c = 0; c < 6; ++c) channels.push_back(white_noise(20 + c, 0.1, 2048));
  const auto pcm = to_float(channels);
  UserState user;
  const auto out = render(single_preset_scene({bed("bed", {0, 1, 2, 3, 4, 5}, LayoutId::surround_5_1)}), pcm, user);
  const auto m = downmix_matrix(LayoutId::surround_5_1, LayoutId::stereo_2_0);
  for (std::size_t i = 0; i < 2048; ++i)
    for (std::size_t o = 0; o < 2; ++o) {
      double expected = 0;
      for (std::size_t c = 0; c < 6; ++c) expected += m.at(o, c) * static_cast<double>(pcm.at(c, i));
      REQUIRE(std::abs(out.at(o, i) - expected) <= 1e-12);
    }
}

TEST_CASE("stereo bed passes through unchanged") {
  const auto pcm = to_float({white_noise(7, 0.1, 3000), white_noise(8, 0.1, 3000)});
  const auto out = render(single_preset_scene({bed("bed", {0, 1}, LayoutId::stereo_2_0)}), pcm);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 3000; ++i) REQUIRE(out.at(c, i) == static_cast<double>(pcm.at(c, i)));
}

TEST_CASE("member gain adds default, static and user gains") {
  auto comp = object("a", 0, 30);
  comp.default_gain = -2.0;
  auto scene = single_preset_scene({comp});
  scene->presets[0].members[0].static_gain = 4.0;
  const auto x = white_noise(9, 0.05, 2048);
  UserState user;
  user.gain_offsets = {{"a", 1.5}};
  const auto out = render(scene, to_float({x}), user);
  const double g = std::pow(10.0, (-2.0 + 4.0 + 1.5) / 20.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    REQUIRE(out.at(0, i) == doctest::Approx(g * static_cast<double>(static_cast<float>(x[i]))).epsilon(1e-12));
}

TEST_CASE("distance gain is 1/d capped at +6 dB") {
  const auto x = white_noise(10, 0.05, 2048);
  for (double d : {0.0, 0.25, 0.5, 2.0, 4.0}) {
    auto comp = object("a", 0, 30);
    std::get<ObjectGeometry>(comp.geometry).position.distance = d;
    const auto out = render(single_preset_scene({comp}), to_float({x}));
    const double g = d > 0 ? std::min(1.0 / d, 2.0) : 2.0;
    CHECK(out.at(0, 100) == doctest::Approx(g * static_cast<double>(static_cast<float>(x[100]))).epsilon(1e-12));
  }
}

TEST_CASE("dynamic gain track ducks sample by sample") {
  auto scene = single_preset_scene({bed("film", {0, 1}, LayoutId::stereo_2_0)});
  const DynamicGainTrack track{"duck", {{0.0, 0.0}, {0.05, -12.0}, {0.1, -12.0}, {0.15, 0.0}}};
  scene->presets[0].members[0].dynamic_gain = track;
  const auto pcm = to_float({white_noise(11, 0.2, 9600), white_noise(12, 0.2, 9600)});
  const auto out = render(scene, pcm);
  for (std::size_t i = 0; i < 9600; ++i) {
    const double g = std::pow(10.0, gain_at(track, static_cast<double>(i) / 48000.0) / 20.0);
    REQUIRE(std::abs(out.at(0, i) - g * static_cast<double>(pcm.at(0, i))) <= 1e-12);
  }
}

TEST_CASE("user gain changes ramp without jumps") {
  auto scene = single_preset_scene({object("a", 0, 30)});
  const auto pcm = to_float({std::vector<double>(47 * 1024, 0.25)});
  Renderer renderer(scene, memory_source(pcm), plain());
  renderer.set_user_state({});
  std::vector<double> y;
  for (std::size_t f = 0; f < renderer.frame_count(); ++f) {
    if (f == 10) {
      UserState u;
      u.gain_offsets = {{"a", 9.0}};
      renderer.set_user_state(u);
    }
    const auto frame = renderer.render_frame(f);
    y.insert(y.end(), frame.channel(0).begin(), frame.channel(0).end());
  }
  const double start = 0.25, end = 0.25 * std::pow(10.0, 9.0 / 20.0);
  const double bound = (end - start) / 4800.0 + 1e-12;
  for (std::size_t i = 1; i < y.size(); ++i) REQUIRE(std::abs(y[i] - y[i - 1]) <= bound);
  CHECK(y.back() == doctest::Approx(end));
}

TEST_CASE("loudness compensation reaches the target") {
  const auto fixture = dialog_fixture(8.0);
  BedSpec bed_spec;
  bed_spec.tracks = {0, 1};
  ObjectSpec dialog;
  dialog.track = 2;
  auto source = memory_source(fixture.pcm);
  auto scene = std::make_shared<const AudioScene>(stamp_loudness(author_dialog_plus_scene(bed_spec, dialog), source));
  for (const auto& preset : scene->presets) {
    UserState user;
    user.selected_preset = preset.preset_id;
    const auto result = render_offline(scene, source, user, RenderSettings{});
    REQUIRE(result.stats.integrated_loudness.valid);
    CHECK(std::abs(result.stats.integrated_loudness.integrated - (-24.0)) <= 0.5);
    CHECK(result.stats.clipped_samples == 0);
  }
}

TEST_CASE("render errors") {
  auto scene = single_preset_scene({object("a", 1)});
  CHECK_THROWS_AS(Renderer(scene, memory_source(FloatBuffer(1, 2048)), plain()), Error);
  Renderer renderer(scene, memory_source(FloatBuffer(2, 2048)), plain());
  try {
    renderer.render_frame(2);
    FAIL("expected eof");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::eof);
  }
}

TEST_CASE("clip guard counts and limits overs") {
  auto comp = object("a", 0, 30);
  auto scene = single_preset_scene({comp});
  const auto pcm = to_float({std::vector<double>(1024, 0.9)});
  UserState user;
  user.gain_offsets = {{"a", 6.0}};
  const auto result = render_offline(scene, memory_source(pcm), user, plain());
  CHECK(result.stats.clipped_samples == 1024);
  for (double v : result.signal.channel(0)) CHECK(v == 1.0);
}
