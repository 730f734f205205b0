#pragma once

#include <vector>

#include "oba/layout.hpp"
#include "oba/scene.hpp"

namespace oba {

/// Per-speaker linear gains for one object, in layout channel order.
using PanningGains = std::vector<double>;

/// Pairwise tangent-law panning between the two loudspeakers adjacent in
/// azimuth. Elevation is ignored (folded onto the horizontal plane at
/// 0 dB). Gains are power normalised and the LFE always receives zero.
PanningGains pan(const Position& position, const SpeakerLayout& layout);

/// Row-major matrix, rows = output channels, columns = input channels.
struct MixMatrix {
  std::size_t outputs = 0;
  std::size_t inputs = 0;
  std::vector<double> coefficients;

  double at(std::size_t out, std::size_t in) const { return coefficients[out * inputs + in]; }
  double& at(std::size_t out, std::size_t in) { return coefficients[out * inputs + in]; }
};

inline constexpr double kDownmixCoefficient = 0.70710678118654752;  // -3 dB

/// Fixed downmix tables for 5.1->2.0, 5.1->1.0, 2.0->1.0 and identity.
/// Matrices from 5.1 are scaled by 1 / (1 + 2 * 0.7071) against overload.
/// Throws unsupported-downmix for any other pair.
MixMatrix downmix_matrix(LayoutId from, LayoutId to);

/// Matrix the renderer uses for a channel bed: downmix_matrix when the pair
/// is supported, otherwise the channels are placed on the matching
/// speakers of the larger layout (mono goes to C on 5.1 and to L/R at
/// -3 dB on stereo).
MixMatrix bed_matrix(LayoutId from, LayoutId to);

}  // namespace oba
