#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oba/audio_source.hpp"
#include "oba/buffer.hpp"
#include "oba/gain_dynamics.hpp"
#include "oba/loudness.hpp"
#include "oba/scene.hpp"

namespace oba {

struct RenderSettings {
  /// Metadata-driven loudness normalisation towards UserState::target_loudness.
  bool loudness_compensation = true;
  bool drc = true;
  double ramp_ms = kDefaultRampMs;
};

/// Per-frame mixing engine. Owns all DSP state of one output stream
/// (gain ramps, compensator, DRC envelope, clip counter); not thread-safe,
/// but may be handed between threads between frames.
///
/// Per frame: fetch tracks, apply member gains (default + static + dynamic
/// + user offset, honouring mutes), pan objects and matrix beds into the
/// target layout, apply loudness compensation, then DRC, then a hard clip
/// guard at +-1.
class Renderer {
 public:
  Renderer(std::shared_ptr<const AudioScene> scene, std::shared_ptr<const AudioSource> source,
           RenderSettings settings = {});

  /// Selects the preset and re-targets every gain; changes after the
  /// first call are ramped over `ramp_ms` unless `immediate`. Offsets are
  /// clamped to the active preset's limits. Throws preset-not-found.
  void set_user_state(const UserState& user, bool immediate = false);

  DoubleBuffer render_frame(std::size_t frame_index);

  const UserState& user_state() const { return user_; }
  const std::string& active_preset() const { return preset_id_; }
  LayoutId layout() const { return user_.target_layout; }
  std::size_t frame_count() const { return source_->frame_count(); }
  std::size_t frame_length() const { return source_->frame_length(); }
  const AudioScene& scene() const { return *scene_; }

  std::uint64_t clipped_samples() const { return clipped_; }
  /// Compensation gain the engine is heading for, in dB; nullopt when
  /// compensation is off or the scene lacks loudness metadata.
  std::optional<double> compensation_target_db() const { return compensation_target_; }
  /// Applied compensation gain in dB for each sample of the last frame.
  const std::vector<double>& last_compensation_db() const { return compensation_db_; }

 private:
  struct ComponentState {
    std::vector<double> current;  // outputs x tracks
    std::vector<double> target;
    std::size_t ramp_remaining = 0;
    const DynamicGainTrack* dynamic = nullptr;
    const DynamicGainTrack* previous_dynamic = nullptr;
    std::size_t dynamic_fade_remaining = 0;
    bool active = false;
  };

  void retarget(bool immediate);
  std::vector<double> target_coefficients(const ComponentGroup& component) const;
  std::optional<double> compute_compensation() const;
  void mix_component(std::size_t index, const FloatBuffer& input, std::size_t first_sample,
                     DoubleBuffer& out);

  std::shared_ptr<const AudioScene> scene_;
  std::shared_ptr<const AudioSource> source_;
  RenderSettings settings_;
  std::size_t ramp_length_;
  UserState user_;
  std::string preset_id_;
  bool primed_ = false;
  std::vector<ComponentState> components_;
  CompensatorState compensator_;
  std::optional<double> compensation_target_;
  std::vector<double> compensation_db_;
  DrcEnvelope drc_envelope_;
  std::uint64_t clipped_ = 0;
};

struct RenderStats {
  std::uint64_t clipped_samples = 0;
  LoudnessMeasurement integrated_loudness;
  std::size_t frames = 0;
};

struct RenderResult {
  DoubleBuffer signal;
  RenderStats stats;
};

/// Renders frames [first_frame, last_frame) and measures the result. With
/// `last_frame` unset the whole source is rendered.
RenderResult render_offline(std::shared_ptr<const AudioScene> scene,
                            std::shared_ptr<const AudioSource> source, const UserState& user,
                            RenderSettings settings = {}, std::size_t first_frame = 0,
                            std::optional<std::size_t> last_frame = std::nullopt);

}  // namespace oba
