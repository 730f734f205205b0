#include "oba/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "oba/error.hpp"
#include "oba/panning.hpp"

namespace oba {

namespace {

constexpr double kMaxDistanceGain = 2.0;  // +6 dB

double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace

Renderer::Renderer(std::shared_ptr<const AudioScene> scene,
                   std::shared_ptr<const AudioSource> source, RenderSettings settings)
    : scene_(std::move(scene)), source_(std::move(source)), settings_(settings) {
  if (!scene_ || !source_) throw Error(ErrorCode::invalid_argument, "renderer needs a scene and audio");
  if (source_->channel_count() < scene_->track_span())
    throw Error(ErrorCode::container_corrupt,
                "audio has " + std::to_string(source_->channel_count()) +
                    " channels but the scene uses " + std::to_string(scene_->track_span()));
  ramp_length_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(settings_.ramp_ms * 1e-3 * source_->sample_rate())));
  compensator_.ramp_length_default = ramp_length_;
  components_.resize(scene_->components.size());
}

void Renderer::set_user_state(const UserState& user, bool immediate) {
  const std::string preset = select_preset(*scene_, user);
  const bool layout_changed = primed_ && user.target_layout != user_.target_layout;
  preset_id_ = preset;
  user_ = clamp_user_state(*scene_, preset_id_, user);
  retarget(immediate || !primed_ || layout_changed);
  primed_ = true;
}

std::vector<double> Renderer::target_coefficients(const ComponentGroup& component) const {
  const auto& layout = speaker_layout(user_.target_layout);
  const std::size_t outputs = layout.channel_count();
  const std::size_t tracks = component.tracks.size();
  std::vector<double> coeffs(outputs * tracks, 0.0);

  const Preset* preset = scene_->find_preset(preset_id_);
  const PresetMember* member = preset ? preset->find_member(component.component_id) : nullptr;
  if (!member || user_.muted.contains(component.component_id)) return coeffs;

  const auto limits = effective_limits(*scene_, *preset, component.component_id);
  double gain_db = component.default_gain + member->static_gain;
  if (auto it = user_.gain_offsets.find(component.component_id); it != user_.gain_offsets.end())
    gain_db += clamp_gain(limits, it->second);
  const double gain = db_to_linear(gain_db);

  if (const auto* object = std::get_if<ObjectGeometry>(&component.geometry)) {
    PositionOffset offset;
    if (auto it = user_.position_offsets.find(component.component_id);
        it != user_.position_offsets.end())
      offset = it->second;
    const Position position = clamp_position(limits, object->position, offset);
    double distance_gain = 1.0;
    if (position.distance != 1.0)
      distance_gain = position.distance > 0.0 ? std::min(1.0 / position.distance, kMaxDistanceGain)
                                              : kMaxDistanceGain;
    const auto pan_gains = pan(position, layout);
    for (std::size_t o = 0; o < outputs; ++o) coeffs[o * tracks] = gain * distance_gain * pan_gains[o];
  } else {
    const auto matrix = bed_matrix(std::get<BedGeometry>(component.geometry).layout, layout.id);
    for (std::size_t o = 0; o < outputs; ++o)
      for (std::size_t t = 0; t < tracks && t < matrix.inputs; ++t)
        coeffs[o * tracks + t] = gain * matrix.at(o, t);
  }
  return coeffs;
}

std::optional<double> Renderer::compute_compensation() const {
  if (!settings_.loudness_compensation) return std::nullopt;
  const Preset* preset = scene_->find_preset(preset_id_);
  if (!preset) return std::nullopt;
  std::map<std::string, double> loudness;
  for (const auto& m : preset->members) {
    const auto* c = scene_->find_component(m.component_id);
    if (!c || !c->loudness) return std::nullopt;
    loudness[m.component_id] = c->loudness->valid ? c->loudness->integrated
                                                   : -std::numeric_limits<double>::infinity();
  }
  const double with_user = estimate_active_loudness(*preset, loudness, user_.gain_offsets, user_.muted);
  const double reference = estimate_active_loudness(*preset, loudness, {}, {});
  double anchor;
  if (preset->measured_loudness) {
    // Anchor on the measured preset loudness; the power sum only supplies
    // the change caused by the listener's adjustments.
    const double delta = std::isfinite(with_user) && std::isfinite(reference) ? with_user - reference : 0.0;
    anchor = *preset->measured_loudness + delta;
  } else {
    anchor = with_user;
  }
  if (!std::isfinite(anchor)) return std::nullopt;
  return compensation_gain(user_.target_loudness, anchor);
}

void Renderer::retarget(bool immediate) {
  const Preset* preset = scene_->find_preset(preset_id_);
  for (std::size_t k = 0; k < scene_->components.size(); ++k) {
    const auto& component = scene_->components[k];
    auto& state = components_[k];
    auto target = target_coefficients(component);
    const PresetMember* member = preset ? preset->find_member(component.component_id) : nullptr;
    const DynamicGainTrack* dynamic =
        member && member->dynamic_gain ? &*member->dynamic_gain : nullptr;

    if (immediate || state.current.size() != target.size()) {
      state.current = target;
      state.ramp_remaining = 0;
      state.dynamic = dynamic;
      state.previous_dynamic = nullptr;
      state.dynamic_fade_remaining = 0;
    } else {
      if (target != state.target) state.ramp_remaining = ramp_length_;
      if (dynamic != state.dynamic) {
        state.previous_dynamic = state.dynamic;
        state.dynamic = dynamic;
        state.dynamic_fade_remaining = ramp_length_;
      }
    }
    state.target = std::move(target);
    state.active = state.ramp_remaining > 0 ||
                   std::any_of(state.current.begin(), state.current.end(),
                               [](double v) { return v != 0.0; });
  }

  compensation_target_ = compute_compensation();
  if (immediate) {
    const double g = compensation_target_.value_or(0.0);
    compensator_.current_gain = g;
    compensator_.ramp_target = g;
    compensator_.ramp_remaining = 0;
  }
}

void Renderer::mix_component(std::size_t index, const FloatBuffer& input,
                             std::size_t first_sample, DoubleBuffer& out) {
  const auto& component = scene_->components[index];
  auto& state = components_[index];
  if (!state.active) return;
  const std::size_t outputs = out.channels();
  const std::size_t tracks = component.tracks.size();
  const std::size_t n = out.frames();
  const double rate = static_cast<double>(source_->sample_rate());

  const bool steady = state.ramp_remaining == 0 && state.dynamic == nullptr &&
                      state.dynamic_fade_remaining == 0;
  if (steady) {
    for (std::size_t t = 0; t < tracks; ++t) {
      auto x = input.channel(component.tracks[t]);
      for (std::size_t o = 0; o < outputs; ++o) {
        const double c = state.current[o * tracks + t];
        if (c == 0.0) continue;
        auto y = out.channel(o);
        for (std::size_t i = 0; i < n; ++i) y[i] += c * static_cast<double>(x[i]);
      }
    }
    return;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (state.ramp_remaining > 0) {
      const double remaining = static_cast<double>(state.ramp_remaining);
      for (std::size_t k = 0; k < state.current.size(); ++k)
        state.current[k] += (state.target[k] - state.current[k]) / remaining;
      if (--state.ramp_remaining == 0) state.current = state.target;
    }
    double dynamic = 1.0;
    if (state.dynamic || state.dynamic_fade_remaining > 0) {
      const double t = static_cast<double>(first_sample + i) / rate;
      dynamic = state.dynamic ? db_to_linear(gain_at(*state.dynamic, t)) : 1.0;
      if (state.dynamic_fade_remaining > 0) {
        const double previous =
            state.previous_dynamic ? db_to_linear(gain_at(*state.previous_dynamic, t)) : 1.0;
        --state.dynamic_fade_remaining;
        const double w = 1.0 - static_cast<double>(state.dynamic_fade_remaining) /
                                   static_cast<double>(ramp_length_);
        dynamic = previous + w * (dynamic - previous);
      }
    }
    for (std::size_t t = 0; t < tracks; ++t) {
      const double x = static_cast<double>(input.at(component.tracks[t], i)) * dynamic;
      for (std::size_t o = 0; o < outputs; ++o) {
        const double c = state.current[o * tracks + t];
        if (c != 0.0) out.at(o, i) += c * x;
      }
    }
  }
  state.active = std::any_of(state.current.begin(), state.current.end(),
                             [](double v) { return v != 0.0; }) ||
                 state.ramp_remaining > 0;
}

DoubleBuffer Renderer::render_frame(std::size_t frame_index) {
  if (!primed_) set_user_state(UserState{});
  if (frame_index >= source_->frame_count())
    throw Error(ErrorCode::eof, "frame " + std::to_string(frame_index) + " is past the end");
  const FloatBuffer input = source_->read_frame(frame_index);
  if (input.channels() < scene_->track_span() || input.frames() != source_->frame_length())
    throw Error(ErrorCode::container_corrupt, "frame " + std::to_string(frame_index) +
                                                  " does not carry the scene's tracks");

  const auto& layout = speaker_layout(user_.target_layout);
  DoubleBuffer out(layout.channel_count(), input.frames());
  const std::size_t first_sample = frame_index * source_->frame_length();
  for (std::size_t k = 0; k < components_.size(); ++k) mix_component(k, input, first_sample, out);

  compensation_db_.assign(out.frames(), 0.0);
  if (settings_.loudness_compensation) {
    const double target = compensation_target_.value_or(0.0);
    const bool constant = compensator_.ramp_remaining == 0 && compensator_.ramp_target == target;
    advance_compensator_into(compensator_, target, compensation_db_);
    if (constant) {
      const double g = db_to_linear(compensation_db_.front());
      if (g != 1.0)
        for (auto& v : out.raw()) v *= g;
    } else {
      for (std::size_t i = 0; i < out.frames(); ++i) {
        const double g = db_to_linear(compensation_db_[i]);
        for (std::size_t c = 0; c < out.channels(); ++c) out.at(c, i) *= g;
      }
    }
  }

  if (settings_.drc && user_.drc_profile) {
    if (const auto* profile = scene_->find_drc_profile(*user_.drc_profile))
      apply_drc(out, *profile, drc_envelope_, source_->sample_rate());
  }

  for (auto& v : out.raw()) {
    if (v > 1.0) {
      v = 1.0;
      ++clipped_;
    } else if (v < -1.0) {
      v = -1.0;
      ++clipped_;
    }
  }
  return out;
}

RenderResult render_offline(std::shared_ptr<const AudioScene> scene,
                            std::shared_ptr<const AudioSource> source, const UserState& user,
                            RenderSettings settings, std::size_t first_frame,
                            std::optional<std::size_t> last_frame) {
  const int rate = source->sample_rate();
  Renderer renderer(std::move(scene), std::move(source), settings);
  renderer.set_user_state(user);
  const std::size_t end = last_frame.value_or(renderer.frame_count());
  if (first_frame > end || end > renderer.frame_count())
    throw Error(ErrorCode::eof, "requested frame range exceeds the audio");

  const std::size_t outputs = speaker_layout(renderer.layout()).channel_count();
  const std::size_t length = renderer.frame_length();
  RenderResult result;
  result.signal = DoubleBuffer(outputs, (end - first_frame) * length);
  for (std::size_t f = first_frame; f < end; ++f) {
    const auto frame = renderer.render_frame(f);
    const std::size_t offset = (f - first_frame) * length;
    for (std::size_t c = 0; c < outputs; ++c) {
      auto src = frame.channel(c);
      std::copy(src.begin(), src.end(), result.signal.channel(c).begin() + static_cast<std::ptrdiff_t>(offset));
    }
  }
  result.stats.frames = end - first_frame;
  result.stats.clipped_samples = renderer.clipped_samples();
  if ((rate == 48000 || rate == 44100) && result.signal.frames() >= static_cast<std::size_t>(rate) * 4 / 10)
    result.stats.integrated_loudness = measure_integrated(result.signal, renderer.layout(), rate);
  return result;
}

}  // namespace oba
