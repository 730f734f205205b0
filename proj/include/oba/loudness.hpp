#pragma once

#include <array>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oba/buffer.hpp"
#include "oba/layout.hpp"
#include "oba/scene.hpp"

namespace oba {

struct BiquadCoefficients {
  double b0, b1, b2, a1, a2;
};

/// The two K-weighting stages (high shelf, then high pass) for a sample rate.
std::array<BiquadCoefficients, 2> k_weighting_coefficients(double sample_rate);

/// Streaming K-weighting filter for one channel (transposed direct form II).
class KWeightingFilter {
 public:
  explicit KWeightingFilter(double sample_rate);
  double process(double x);
  void reset();

 private:
  std::array<BiquadCoefficients, 2> coeffs_;
  std::array<std::array<double, 2>, 2> state_{};
};

/// Per-channel weighting for a layout: surround channels +1.5 dB, LFE excluded.
std::vector<double> loudness_channel_weights(const SpeakerLayout& layout);

inline constexpr double kAbsoluteGateLkfs = -70.0;
inline constexpr double kRelativeGateLu = -10.0;

/// Gated integrated loudness over 400 ms blocks with 75 % overlap.
/// Throws too-short, layout-mismatch or unsupported-sample-rate.
LoudnessMeasurement measure_integrated(const DoubleBuffer& signal, LayoutId layout,
                                       int sample_rate);

/// Power sum of the active members' loudness with their static gains and
/// user offsets; muted members are left out. Gated components may be given
/// as -infinity. Throws missing-metadata when an active member has no entry.
double estimate_active_loudness(const Preset& preset,
                                const std::map<std::string, double>& component_loudness,
                                const std::map<std::string, double>& offsets,
                                const std::set<std::string>& muted);

inline double compensation_gain(double target, double estimated) { return target - estimated; }

inline constexpr double kDefaultRampMs = 100.0;

struct CompensatorState {
  double current_gain = 0.0;  // dB
  std::size_t ramp_remaining = 0;
  double ramp_target = 0.0;  // dB
  std::size_t ramp_length_default = 4800;
};

struct CompensatorOutput {
  std::vector<double> linear_gains;
  CompensatorState state;
};

/// Advances the gain smoother by `n` samples. A change of target starts a
/// ramp, linear in dB, of `ramp_length_default` samples from the current
/// gain. Writes the dB value of every sample into `gains_db`.
void advance_compensator_into(CompensatorState& state, double new_target,
                              std::span<double> gains_db);

CompensatorOutput advance_compensator(CompensatorState state, double new_target, std::size_t n);

/// Sliding 400 ms K-weighted loudness of a running output, for meters.
class MomentaryMeter {
 public:
  MomentaryMeter(LayoutId layout, int sample_rate);
  void process(const DoubleBuffer& block);
  /// LKFS over the most recent 400 ms; -infinity until audio has been seen.
  double momentary() const;

 private:
  std::vector<KWeightingFilter> filters_;
  std::vector<double> weights_;
  std::size_t subblock_length_;
  std::size_t subblock_fill_ = 0;
  double subblock_energy_ = 0.0;
  std::deque<double> subblocks_;
};

}  // namespace oba
