#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oba/error.hpp"
#include "oba/gain_dynamics.hpp"
#include "support/signals.hpp"

using namespace oba;
using namespace oba::testing;

namespace {

double max_reconstruction_error(const AutomationCurve& curve, const DynamicGainTrack& track) {
  double worst = 0.0;
  for (const auto& p : curve.samples) worst = std::max(worst, std::abs(gain_at(track, p.time) - p.gain));
  return worst;
}

AutomationCurve as_curve(const DynamicGainTrack& track) { return {track.breakpoints}; }

double peak_db(std::span<const double> x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return 20.0 * std::log10(peak);
}

DrcProfile two_to_one_above_minus_30() {
  return {"test", {{-70, 0}, {-30, 0}, {0, -15}}, 5.0, 200.0};
}

}  // namespace

TEST_CASE("gain_at interpolates in dB and holds the ends") {
  const DynamicGainTrack track{"t", {{0, 0}, {1, -6}}};
  CHECK(gain_at(track, 0.5) == doctest::Approx(-3));
  CHECK(gain_at(track, -1) == 0);
  CHECK(gain_at(track, 2) == -6);
  CHECK(gain_at(track, 1) == -6);
  const DynamicGainTrack single{"s", {{2, -4}}};
  CHECK(gain_at(single, 0) == -4);
}

TEST_CASE("check_track rejects malformed tracks") {
  CHECK(check_track({"t", {{0, 0}, {1, -6}}}).empty());
  CHECK_FALSE(check_track({"t", {}}).empty());
  CHECK_FALSE(check_track({"t", {{1, 0}, {1, -6}}}).empty());
  CHECK_FALSE(check_track({"t", {{0, std::numeric_limits<double>::infinity()}}}).empty());
}

TEST_CASE("import_automation sorts and collapses duplicates") {
  const std::vector<GainPoint> identical{{0, 0}, {0.5, -12}, {1, 0}};
  CHECK(import_automation(identical).samples == identical);
  const std::vector<GainPoint> reversed{{1, 0}, {0, 0}};
  CHECK(import_automation(reversed).samples == std::vector<GainPoint>{{0, 0}, {1, 0}});
  const std::vector<GainPoint> dup{{0, 0}, {0.5, -3}, {0.5, -6}, {1, 0}};
  CHECK(import_automation(dup).samples == std::vector<GainPoint>{{0, 0}, {0.5, -6}, {1, 0}});
}

TEST_CASE("import_automation names the offending row") {
  const std::vector<GainPoint> nan_row{{0, std::nan("")}};
  try {
    import_automation(nan_row);
    FAIL("expected malformed-automation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::malformed_automation);
    CHECK(std::string(e.what()).find("row 0") != std::string::npos);
  }
  const std::vector<GainPoint> negative{{0, 0}, {-1, 0}};
  try {
    import_automation(negative);
    FAIL("expected malformed-automation");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("automation CSV parsing") {
  const auto curve = parse_automation_csv("\xEF\xBB\xBFtime_s,gain_db\r\n0,0\r\n0.5,-12\r\n1,0\r\n");
  CHECK(curve.samples == std::vector<GainPoint>{{0, 0}, {0.5, -12}, {1, 0}});
  CHECK(parse_automation_csv("time_s,gain_db\n1,0\n0,-3\n").samples.front() == GainPoint{0, -3});
  CHECK_THROWS_AS(parse_automation_csv("time,gain\n0,0\n"), Error);
  CHECK_THROWS_AS(parse_automation_csv("time_s,gain_db\n0,abc\n"), Error);
  CHECK_THROWS_AS(parse_automation_csv("time_s,gain_db\n0\n"), Error);
}

TEST_CASE("simplify_automation examples") {
  AutomationCurve ramp;
  for (int i = 0; i < 100; ++i) ramp.samples.push_back({i * 0.01, -0.12 * i});
  const auto simplified = simplify_automation(ramp, 0.1);
  CHECK(simplified.breakpoints.size() == 2);
  CHECK(simplified.breakpoints.front() == ramp.samples.front());
  CHECK(simplified.breakpoints.back() == ramp.samples.back());

  const auto duck = duck_automation(3.0, {{1.0, 2.0}}, -12.0, 0.005, 0.001);
  const auto duck_track = simplify_automation(duck, 0.1);
  CHECK(duck_track.breakpoints.size() >= 4);
  CHECK(max_reconstruction_error(duck, duck_track) <= 0.1);

  AutomationCurve constant;
  for (int i = 0; i < 50; ++i) constant.samples.push_back({i * 0.1, -3.0});
  const auto flat = simplify_automation(constant, 0.1);
  REQUIRE(flat.breakpoints.size() == 2);
  CHECK(flat.breakpoints[0].gain == flat.breakpoints[1].gain);

  CHECK_THROWS_AS(simplify_automation(ramp, 0.0), Error);
}

TEST_CASE("simplify_automation bound and idempotence on random curves") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> step(0.001, 0.05);
  std::normal_distribution<double> walk(0.0, 0.8);
  std::uniform_real_distribution<double> eps(0.01, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    AutomationCurve curve;
    double t = 0.0, g = 0.0;
    const int n = 2 + static_cast<int>(rng() % 400);
    for (int i = 0; i < n; ++i) {
      curve.samples.push_back({t, g});
      t += step(rng);
      g = std::clamp(g + walk(rng), -40.0, 6.0);
    }
    const double e = eps(rng);
    const auto track = simplify_automation(curve, e);
    REQUIRE(check_track(track).empty());
    REQUIRE(max_reconstruction_error(curve, track) <= e + 1e-12);
    REQUIRE(track.breakpoints.front() == curve.samples.front());
    REQUIRE(track.breakpoints.back() == curve.samples.back());
    REQUIRE(simplify_automation(as_curve(track), e).breakpoints == track.breakpoints);
  }
}

TEST_CASE("DRC profile validation") {
  CHECK(check_drc_profile(two_to_one_above_minus_30()).empty());
  for (const auto& p : builtin_drc_profiles()) CHECK(check_drc_profile(p).empty());
  CHECK(find_builtin_drc_profile("none") != nullptr);
  CHECK(find_builtin_drc_profile("limited") != nullptr);
  CHECK(find_builtin_drc_profile("noisy-environment") != nullptr);
  DrcProfile expanding{"x", {{-70, 0}, {-30, 0}, {0, 10}}, 5, 200};
  CHECK_FALSE(check_drc_profile(expanding).empty());
  DrcProfile short_curve{"x", {{-40, 0}, {0, -10}}, 5, 200};
  CHECK_FALSE(check_drc_profile(short_curve).empty());
  DrcProfile zero_attack{"x", {{-70, 0}, {0, -10}}, 0, 200};
  CHECK_FALSE(check_drc_profile(zero_attack).empty());
}

TEST_CASE("identity DRC leaves samples untouched") {
  auto x = to_double({white_noise(1, 0.3, 9600), white_noise(2, 0.3, 9600)});
  const auto original = x;
  DrcEnvelope env;
  apply_drc(x, *find_builtin_drc_profile("none"), env, 48000);
  CHECK(x == original);
  DrcProfile flat{"flat", {{-70, 0}, {0, 0}}, 5, 200};
  apply_drc(x, flat, env, 48000);
  CHECK(x == original);
}

TEST_CASE("DRC steady state follows the static curve") {
  const auto profile = two_to_one_above_minus_30();
  auto x = to_double({sine(1000, 0.1, 3.0)});
  DrcEnvelope env;
  for (std::size_t start = 0; start < x.frames(); start += 1024) {
    const std::size_t n = std::min<std::size_t>(1024, x.frames() - start);
    DoubleBuffer block(1, n);
    std::copy_n(x.channel(0).begin() + static_cast<std::ptrdiff_t>(start), n, block.channel(0).begin());
    apply_drc(block, profile, env, 48000);
    std::copy_n(block.channel(0).begin(), n, x.channel(0).begin() + static_cast<std::ptrdiff_t>(start));
  }
  // static-curve oracle: -30 + (-20 + 30) / 2
  const double expected = -30.0 + (-20.0 + 30.0) / 2.0;
  const auto tail = x.channel(0).subspan(x.frames() - 24000);
  CHECK(std::abs(peak_db(tail) - expected) <= 0.5);
}

TEST_CASE("DRC narrows the level difference of alternating blocks") {
  std::vector<double> signal;
  for (int block = 0; block < 6; ++block) {
    const auto part = sine(440, block % 2 == 0 ? 0.5 : 0.02, 1.0);
    signal.insert(signal.end(), part.begin(), part.end());
  }
  auto x = to_double({signal});
  DrcEnvelope env;
  apply_drc(x, *find_builtin_drc_profile("noisy-environment"), env, 48000);
  auto level = [](std::span<const double> s) {
    double sum = 0;
    for (double v : s) sum += v * v;
    return 10 * std::log10(sum / static_cast<double>(s.size()));
  };
  const auto in = std::span<const double>(signal);
  const auto out = x.channel(0);
  // compare the last loud and quiet seconds
  const double in_diff = level(in.subspan(4 * 48000, 48000)) - level(in.subspan(5 * 48000, 48000));
  const double out_diff = level(out.subspan(4 * 48000, 48000)) - level(out.subspan(5 * 48000, 48000));
  CHECK(out_diff < in_diff);
}

TEST_CASE("DRC never raises the peak by more than the largest curve gain") {
  std::mt19937 rng(5);
  for (const auto& profile : builtin_drc_profiles()) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> a = white_noise(static_cast<std::uint32_t>(rng()), 0.01 + 0.1 * trial, 24000);
      std::vector<double> b = white_noise(static_cast<std::uint32_t>(rng()), 0.05, 24000);
      auto x = to_double({a, b});
      const auto before = x;
      DrcEnvelope env;
      apply_drc(x, profile, env, 48000);
      double in_peak = 0, out_peak = 0;
      for (double v : before.raw()) in_peak = std::max(in_peak, std::abs(v));
      for (double v : x.raw()) out_peak = std::max(out_peak, std::abs(v));
      CHECK(out_peak <= in_peak * std::pow(10.0, profile.max_gain_db() / 20.0) * (1 + 1e-12));
      // shared gain across channels: the ratio between channels is unchanged
      for (std::size_t i = 0; i < x.frames(); i += 997)
        if (before.at(1, i) != 0.0)
          CHECK(x.at(0, i) / x.at(1, i) == doctest::Approx(before.at(0, i) / before.at(1, i)).epsilon(1e-9));
    }
  }
}
