#include "oba/panning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oba/error.hpp"

namespace oba {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Counter-clockwise angular distance from a to b, in [0, 360).
double ccw_distance(double a, double b) {
  double d = std::fmod(b - a, 360.0);
  if (d < 0.0) d += 360.0;
  return d;
}

struct SpeakerRef {
  std::size_t channel;
  double azimuth;
};

void pan_pair(PanningGains& gains, const SpeakerRef& right, const SpeakerRef& left,
              double source_from_right) {
  // right -> left spans `aperture` degrees counter-clockwise.
  const double aperture = ccw_distance(right.azimuth, left.azimuth);
  const double half = 0.5 * aperture;
  const double phi = source_from_right - half;  // relative to the pair centre, positive to left
  const double ratio = std::tan(phi * kDegToRad) / std::tan(half * kDegToRad);
  // ratio = (gl - gr) / (gl + gr)
  double gl = 1.0 + ratio;
  double gr = 1.0 - ratio;
  gl = std::max(gl, 0.0);
  gr = std::max(gr, 0.0);
  const double norm = std::sqrt(gl * gl + gr * gr);
  gains[left.channel] = gl / norm;
  gains[right.channel] = gr / norm;
}

}  // namespace

PanningGains pan(const Position& position, const SpeakerLayout& layout) {
  PanningGains gains(layout.channel_count(), 0.0);
  std::vector<SpeakerRef> ring;
  for (std::size_t c = 0; c < layout.speakers.size(); ++c)
    if (!layout.speakers[c].is_lfe) ring.push_back({c, layout.speakers[c].azimuth});
  if (ring.empty()) return gains;
  if (ring.size() == 1) {
    gains[ring.front().channel] = 1.0;
    return gains;
  }

  double azimuth = normalize_azimuth(position.azimuth);
  std::sort(ring.begin(), ring.end(),
            [](const SpeakerRef& a, const SpeakerRef& b) { return a.azimuth < b.azimuth; });

  if (ring.size() == 2) {
    // A front pair cannot image behind the listener: mirror rear sources to
    // the front and hold the level at the speaker beyond the pair.
    if (azimuth > 90.0) azimuth = 180.0 - azimuth;
    if (azimuth < -90.0) azimuth = -180.0 - azimuth;
    const auto& right = ring.front();
    const auto& left = ring.back();
    if (azimuth >= left.azimuth) {
      gains[left.channel] = 1.0;
      return gains;
    }
    if (azimuth <= right.azimuth) {
      gains[right.channel] = 1.0;
      return gains;
    }
    pan_pair(gains, right, left, azimuth - right.azimuth);
    return gains;
  }

  // Find the pair (ring[i] -> ring[i+1] counter-clockwise) enclosing the source.
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const auto& right = ring[i];
    const auto& left = ring[(i + 1) % ring.size()];
    const double span = ccw_distance(right.azimuth, left.azimuth);
    const double offset = ccw_distance(right.azimuth, azimuth);
    if (offset <= span) {
      if (offset == 0.0) {
        gains[right.channel] = 1.0;
      } else if (offset == span) {
        gains[left.channel] = 1.0;
      } else {
        pan_pair(gains, right, left, offset);
      }
      return gains;
    }
  }
  gains[ring.front().channel] = 1.0;
  return gains;
}

namespace {

MixMatrix identity(std::size_t n) {
  MixMatrix m{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

// 5.1 channel order: L R C LFE Ls Rs
MixMatrix surround_to_stereo() {
  constexpr double k = kDownmixCoefficient;
  constexpr double scale = 1.0 / (1.0 + 2.0 * kDownmixCoefficient);
  MixMatrix m{2, 6, std::vector<double>(12, 0.0)};
  m.at(0, 0) = scale;
  m.at(0, 2) = k * scale;
  m.at(0, 4) = k * scale;
  m.at(1, 1) = scale;
  m.at(1, 2) = k * scale;
  m.at(1, 5) = k * scale;
  return m;
}

MixMatrix multiply(const MixMatrix& a, const MixMatrix& b) {
  MixMatrix out{a.outputs, b.inputs, std::vector<double>(a.outputs * b.inputs, 0.0)};
  for (std::size_t o = 0; o < a.outputs; ++o)
    for (std::size_t i = 0; i < b.inputs; ++i) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.inputs; ++k) sum += a.at(o, k) * b.at(k, i);
      out.at(o, i) = sum;
    }
  return out;
}

}  // namespace

MixMatrix downmix_matrix(LayoutId from, LayoutId to) {
  if (from == to) return identity(speaker_layout(from).channel_count());
  const MixMatrix stereo_to_mono{1, 2, {0.5, 0.5}};
  if (from == LayoutId::surround_5_1 && to == LayoutId::stereo_2_0) return surround_to_stereo();
  if (from == LayoutId::surround_5_1 && to == LayoutId::mono_1_0)
    return multiply(stereo_to_mono, surround_to_stereo());
  if (from == LayoutId::stereo_2_0 && to == LayoutId::mono_1_0) return stereo_to_mono;
  throw Error(ErrorCode::unsupported_downmix, "no downmix from " + std::string(layout_name(from)) +
                                                  " to " + std::string(layout_name(to)));
}

MixMatrix bed_matrix(LayoutId from, LayoutId to) {
  const auto& src = speaker_layout(from);
  const auto& dst = speaker_layout(to);
  if (src.channel_count() >= dst.channel_count()) return downmix_matrix(from, to);
  MixMatrix m{dst.channel_count(), src.channel_count(),
              std::vector<double>(dst.channel_count() * src.channel_count(), 0.0)};
  for (std::size_t i = 0; i < src.channel_count(); ++i) {
    const auto gains = pan(Position{src.speakers[i].azimuth, 0.0, 1.0}, dst);
    for (std::size_t o = 0; o < dst.channel_count(); ++o) m.at(o, i) = gains[o];
  }
  return m;
}

}  // namespace oba
