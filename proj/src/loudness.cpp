#include "oba/loudness.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "oba/error.hpp"

namespace oba {

std::array<BiquadCoefficients, 2> k_weighting_coefficients(double fs) {
  std::array<BiquadCoefficients, 2> out{};
  {
    // high shelf modelling the acoustic effect of the head
    const double f0 = 1681.974450955533;
    const double gain_db = 3.999843853973347;
    const double q = 0.7071752369554196;
    const double k = std::tan(std::numbers::pi * f0 / fs);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    const double a0 = 1.0 + k / q + k * k;
    out[0] = {(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0,
              (vh - vb * k / q + k * k) / a0, 2.0 * (k * k - 1.0) / a0,
              (1.0 - k / q + k * k) / a0};
  }
  {
    // RLB high pass
    const double f0 = 38.13547087602444;
    const double q = 0.5003270373238773;
    const double k = std::tan(std::numbers::pi * f0 / fs);
    const double a0 = 1.0 + k / q + k * k;
    out[1] = {1.0, -2.0, 1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  return out;
}

KWeightingFilter::KWeightingFilter(double sample_rate)
    : coeffs_(k_weighting_coefficients(sample_rate)) {}

double KWeightingFilter::process(double x) {
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& c = coeffs_[s];
    auto& z = state_[s];
    const double y = c.b0 * x + z[0];
    z[0] = c.b1 * x - c.a1 * y + z[1];
    z[1] = c.b2 * x - c.a2 * y;
    x = y;
  }
  return x;
}

void KWeightingFilter::reset() { state_ = {}; }

std::vector<double> loudness_channel_weights(const SpeakerLayout& layout) {
  std::vector<double> weights;
  for (const auto& s : layout.speakers) {
    if (s.is_lfe)
      weights.push_back(0.0);
    else if (std::abs(s.azimuth) > 60.0)
      weights.push_back(1.41);
    else
      weights.push_back(1.0);
  }
  return weights;
}

namespace {

constexpr double kLoudnessOffset = -0.691;

double energy_to_lkfs(double energy) {
  return energy > 0.0 ? kLoudnessOffset + 10.0 * std::log10(energy)
                      : -std::numeric_limits<double>::infinity();
}

}  // namespace

LoudnessMeasurement measure_integrated(const DoubleBuffer& signal, LayoutId layout_id,
                                       int sample_rate) {
  if (sample_rate != 48000 && sample_rate != 44100)
    throw Error(ErrorCode::unsupported_sample_rate,
                "loudness measurement supports 48000 and 44100 Hz, got " +
                    std::to_string(sample_rate));
  const auto& layout = speaker_layout(layout_id);
  if (signal.channels() != layout.channel_count())
    throw Error(ErrorCode::layout_mismatch,
                "signal has " + std::to_string(signal.channels()) + " channels, layout " +
                    std::string(layout_name(layout_id)) + " needs " +
                    std::to_string(layout.channel_count()));

  const std::size_t hop = static_cast<std::size_t>(std::llround(0.1 * sample_rate));
  const std::size_t block = 4 * hop;
  if (signal.frames() < block)
    throw Error(ErrorCode::too_short, "signal shorter than one 400 ms gating block");

  const auto weights = loudness_channel_weights(layout);
  const std::size_t hops = signal.frames() / hop;

  // Weighted mean-square energy of every 100 ms hop; blocks are sums of four.
  std::vector<double> hop_energy(hops, 0.0);
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    if (weights[c] == 0.0) continue;
    KWeightingFilter filter(sample_rate);
    auto samples = signal.channel(c);
    for (std::size_t h = 0; h < hops; ++h) {
      double sum = 0.0;
      for (std::size_t i = h * hop; i < (h + 1) * hop; ++i) {
        const double y = filter.process(samples[i]);
        sum += y * y;
      }
      hop_energy[h] += weights[c] * sum;
    }
  }

  std::vector<double> blocks;
  blocks.reserve(hops);
  for (std::size_t h = 0; h + 4 <= hops; ++h)
    blocks.push_back((hop_energy[h] + hop_energy[h + 1] + hop_energy[h + 2] + hop_energy[h + 3]) /
                     static_cast<double>(block));

  auto gated_mean = [&](double threshold_lkfs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double e : blocks)
      if (energy_to_lkfs(e) > threshold_lkfs) {
        sum += e;
        ++n;
      }
    return n ? sum / static_cast<double>(n) : 0.0;
  };

  const double above_absolute = gated_mean(kAbsoluteGateLkfs);
  if (above_absolute <= 0.0) return {0.0, false};
  const double relative_gate = energy_to_lkfs(above_absolute) + kRelativeGateLu;
  const double gated = gated_mean(std::max(relative_gate, kAbsoluteGateLkfs));
  if (gated <= 0.0) return {0.0, false};
  return {energy_to_lkfs(gated), true};
}

double estimate_active_loudness(const Preset& preset,
                                const std::map<std::string, double>& component_loudness,
                                const std::map<std::string, double>& offsets,
                                const std::set<std::string>& muted) {
  double power = 0.0;
  for (const auto& m : preset.members) {
    if (muted.contains(m.component_id)) continue;
    auto it = component_loudness.find(m.component_id);
    if (it == component_loudness.end())
      throw Error(ErrorCode::missing_metadata, "no loudness stored for component " + m.component_id);
    if (std::isinf(it->second) && it->second < 0.0) continue;
    double offset = 0.0;
    if (auto o = offsets.find(m.component_id); o != offsets.end()) offset = o->second;
    power += std::pow(10.0, (it->second + m.static_gain + offset) / 10.0);
  }
  return power > 0.0 ? 10.0 * std::log10(power) : -std::numeric_limits<double>::infinity();
}

void advance_compensator_into(CompensatorState& state, double new_target,
                              std::span<double> gains_db) {
  if (new_target != state.ramp_target) {
    state.ramp_target = new_target;
    state.ramp_remaining = std::max<std::size_t>(state.ramp_length_default, 1);
  }
  for (auto& g : gains_db) {
    if (state.ramp_remaining > 0) {
      state.current_gain +=
          (state.ramp_target - state.current_gain) / static_cast<double>(state.ramp_remaining);
      if (--state.ramp_remaining == 0) state.current_gain = state.ramp_target;
    }
    g = state.current_gain;
  }
}

CompensatorOutput advance_compensator(CompensatorState state, double new_target, std::size_t n) {
  CompensatorOutput out;
  out.linear_gains.resize(n);
  advance_compensator_into(state, new_target, out.linear_gains);
  for (auto& g : out.linear_gains) g = std::pow(10.0, g / 20.0);
  out.state = state;
  return out;
}

MomentaryMeter::MomentaryMeter(LayoutId layout, int sample_rate)
    : weights_(loudness_channel_weights(speaker_layout(layout))),
      subblock_length_(static_cast<std::size_t>(std::llround(0.1 * sample_rate))) {
  filters_.assign(weights_.size(), KWeightingFilter(sample_rate));
}

void MomentaryMeter::process(const DoubleBuffer& block) {
  const std::size_t channels = std::min(block.channels(), filters_.size());
  for (std::size_t i = 0; i < block.frames(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double y = filters_[c].process(block.at(c, i));
      subblock_energy_ += weights_[c] * y * y;
    }
    if (++subblock_fill_ == subblock_length_) {
      subblocks_.push_back(subblock_energy_ / static_cast<double>(subblock_length_));
      if (subblocks_.size() > 4) subblocks_.pop_front();
      subblock_energy_ = 0.0;
      subblock_fill_ = 0;
    }
  }
}

double MomentaryMeter::momentary() const {
  if (subblocks_.empty()) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double e : subblocks_) sum += e;
  return energy_to_lkfs(sum / static_cast<double>(subblocks_.size()));
}

}  // namespace oba
