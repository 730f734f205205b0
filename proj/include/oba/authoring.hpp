#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oba/audio_source.hpp"
#include "oba/gain_dynamics.hpp"
#include "oba/scene.hpp"

namespace oba {

/// A channel bed taken from the audio file; its layout follows from the
/// number of tracks (1, 2 or 6).
struct BedSpec {
  std::string component_id = "bed";
  LabelSet labels = make_labels("Background");
  std::vector<std::size_t> tracks;
  ContentKind content_kind = ContentKind::mixed_bed;
};

struct ObjectSpec {
  std::string component_id = "dialog";
  LabelSet labels = make_labels("Voice-over");
  std::optional<std::size_t> track;
  Position position;
  ContentKind content_kind = ContentKind::dialogue;
};

struct SceneFraming {
  std::string scene_id = "scene";
  int sample_rate = 48000;
  int frame_length = 1024;
  /// Channels available in the audio file; 0 skips the track check.
  std::size_t audio_channels = 0;
};

struct DialogPlusOptions {
  double interactivity_db = 9.0;
  double dialogplus_offset_db = 6.0;
  LabelSet default_labels = make_labels("Default mix");
  LabelSet dialogplus_labels = make_labels("Dialog+");
  SceneFraming framing;
};

inline constexpr const char* kDefaultMixPresetId = "default_mix";
inline constexpr const char* kDialogPlusPresetId = "dialog_plus";
inline constexpr const char* kDefaultPresetId = "default";
inline constexpr const char* kAudioDescriptionPresetId = "audio_description";

/// Builds the two-preset dialogue enhancement scene: "Default mix"
/// (high-quality loudspeakers) and "Dialog+" (hearing impaired) which
/// raises the dialogue by a static offset. Both presets let the listener
/// move the dialogue level within +-interactivity_db. Loudness is not
/// stamped. Throws missing-audio.
AudioScene author_dialog_plus_scene(const BedSpec& bed, const ObjectSpec& dialog,
                                    const DialogPlusOptions& options = {});

struct AdOptions {
  double ad_gain_db = 6.0;
  double azimuth_range = 180.0;
  double elevation_min = 0.0;
  double elevation_max = 30.0;
  double epsilon_db = kDefaultSimplifyEpsilonDb;
  LabelSet default_labels = make_labels("Default");
  LabelSet ad_labels = make_labels("Audio description");
  SceneFraming framing;
};

/// Builds the audio description scene: "Default" carries the film mix
/// alone; "Audio description" adds the AD voice and ducks the film mix
/// with the simplified workstation automation.
AudioScene author_ad_scene(const BedSpec& film_mix, const ObjectSpec& ad_voice,
                           const AutomationCurve& automation, const AdOptions& options = {});

/// Measures every component solo and every preset at its default state
/// (stereo reference layout, no compensation, no DRC) and stores the
/// results in the returned scene. Propagates too-short.
AudioScene stamp_loudness(const AudioScene& scene, std::shared_ptr<const AudioSource> audio);

struct MonitorRow {
  std::string preset_id;
  LayoutId layout;
  std::string user_case;  // "default", "all-min", "all-max"
  std::uint64_t clipped_samples = 0;
  LoudnessMeasurement loudness;
  double target_loudness = kDefaultTargetLoudness;
};

struct MonitorReport {
  std::vector<MonitorRow> rows;
  std::vector<std::string> notes;
};

/// Renders each preset on each requested layout at the default, minimum
/// and maximum interactivity settings and collects clipping and loudness.
/// Layout names that are not supported are reported in `notes`.
MonitorReport monitor_report(const AudioScene& scene, std::shared_ptr<const AudioSource> audio,
                             const std::vector<std::string>& layouts = {"mono_1_0", "stereo_2_0",
                                                                        "surround_5_1"});

}  // namespace oba
