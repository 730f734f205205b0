#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oba/gain_dynamics.hpp"
#include "oba/layout.hpp"

namespace oba {

/// Object position. Azimuth in (-180, 180] with 0 = front and positive to
/// the left; elevation in [-90, 90]; distance 1 is the reference distance.
struct Position {
  double azimuth = 0.0;
  double elevation = 0.0;
  double distance = 1.0;

  friend bool operator==(const Position&, const Position&) = default;
};

double normalize_azimuth(double degrees);

struct PositionOffset {
  double azimuth = 0.0;
  double elevation = 0.0;

  friend bool operator==(const PositionOffset&, const PositionOffset&) = default;
};

/// Range the listener may move a component within. Gains are offsets in
/// dB; elevation bounds are offsets relative to the authored position.
struct InteractivityLimits {
  double gain_min = 0.0;
  double gain_max = 0.0;
  double azimuth_range = 0.0;
  double elevation_min = 0.0;
  double elevation_max = 0.0;
  bool on_off_allowed = false;

  bool allows_gain() const { return gain_min < gain_max; }
  bool allows_position() const {
    return azimuth_range > 0.0 || elevation_min < elevation_max;
  }
  /// True when every range of `this` lies inside `outer`.
  bool within(const InteractivityLimits& outer) const;

  friend bool operator==(const InteractivityLimits&, const InteractivityLimits&) = default;
};

std::string check_limits(const InteractivityLimits& limits);

struct LabelSet {
  std::string default_language = "en";
  std::map<std::string, std::string> entries;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

LabelSet make_labels(std::string english);

enum class ContentKind { dialogue, music, effects, audio_description, spoken_subtitles, mixed_bed };

std::string_view content_kind_name(ContentKind kind);
std::optional<ContentKind> parse_content_kind(std::string_view name);

struct ObjectGeometry {
  Position position;
  friend bool operator==(const ObjectGeometry&, const ObjectGeometry&) = default;
};

struct BedGeometry {
  LayoutId layout = LayoutId::stereo_2_0;
  friend bool operator==(const BedGeometry&, const BedGeometry&) = default;
};

using Geometry = std::variant<ObjectGeometry, BedGeometry>;

/// Result of an integrated loudness measurement; `valid` is false when
/// the signal never rises above the absolute gate.
struct LoudnessMeasurement {
  double integrated = 0.0;  // LKFS, meaningful only when valid
  bool valid = false;

  friend bool operator==(const LoudnessMeasurement&, const LoudnessMeasurement&) = default;
};

struct ComponentGroup {
  std::string component_id;
  LabelSet labels;
  ContentKind content_kind = ContentKind::dialogue;
  std::vector<std::size_t> tracks;
  Geometry geometry = ObjectGeometry{};
  double default_gain = 0.0;
  InteractivityLimits interactivity;
  /// Solo loudness stamped during authoring; absent until measured.
  std::optional<LoudnessMeasurement> loudness;

  bool is_object() const { return std::holds_alternative<ObjectGeometry>(geometry); }

  friend bool operator==(const ComponentGroup&, const ComponentGroup&) = default;
};

struct PresetKind {
  enum class Tag {
    default_mix,
    high_quality_loudspeakers,
    hearing_impaired,
    audio_description,
    spoken_subtitles,
    simplified_language,
    other,
  };
  Tag tag = Tag::default_mix;
  std::string other_name;  // only for Tag::other

  friend bool operator==(const PresetKind&, const PresetKind&) = default;
  friend auto operator<=>(const PresetKind&, const PresetKind&) = default;
};

/// "default", "hearing_impaired", ..., or "other:<name>".
std::string preset_kind_name(const PresetKind& kind);
std::optional<PresetKind> parse_preset_kind(std::string_view name);

struct PresetMember {
  std::string component_id;
  double static_gain = 0.0;
  std::optional<DynamicGainTrack> dynamic_gain;
  std::optional<InteractivityLimits> interactivity_override;

  friend bool operator==(const PresetMember&, const PresetMember&) = default;
};

struct Preset {
  std::string preset_id;
  LabelSet labels;
  PresetKind kind;
  std::vector<PresetMember> members;
  std::optional<double> measured_loudness;  // LKFS

  const PresetMember* find_member(std::string_view component_id) const;

  friend bool operator==(const Preset&, const Preset&) = default;
};

struct AudioScene {
  std::string scene_id;
  int sample_rate = 48000;
  int frame_length = 1024;
  std::vector<ComponentGroup> components;
  std::vector<Preset> presets;
  std::string default_preset_id;
  std::vector<DrcProfile> drc_profiles;  // in addition to the built-in ones

  const ComponentGroup* find_component(std::string_view id) const;
  const Preset* find_preset(std::string_view id) const;
  /// Scene-defined profiles shadow the built-ins.
  const DrcProfile* find_drc_profile(std::string_view id) const;
  /// Highest track index + 1 (0 for a scene without tracks).
  std::size_t track_span() const;

  friend bool operator==(const AudioScene&, const AudioScene&) = default;
};

/// Limits for `component_id` inside `preset`: the member override when
/// present, the component's own limits otherwise.
InteractivityLimits effective_limits(const AudioScene& scene, const Preset& preset,
                                     std::string_view component_id);

struct UserState {
  std::optional<std::string> selected_preset;
  std::vector<PresetKind> kind_preferences;
  std::map<std::string, double> gain_offsets;
  std::map<std::string, PositionOffset> position_offsets;
  std::set<std::string> muted;
  LayoutId target_layout = LayoutId::stereo_2_0;
  double target_loudness = -24.0;
  std::optional<std::string> drc_profile;

  friend bool operator==(const UserState&, const UserState&) = default;
};

inline constexpr double kDefaultTargetLoudness = -24.0;

enum class Severity { error, warning };

struct ValidationIssue {
  Severity severity;
  std::string code;
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  std::size_t error_count() const;
  std::size_t warning_count() const;
  bool ok() const { return error_count() == 0; }
  bool has(std::string_view code) const;
};

ValidationReport validate_scene(const AudioScene& scene);

/// Explicit selection, then the first preferred kind present in the
/// scene (kind `other` never auto-selects), then the default preset.
/// Throws preset-not-found for an unknown explicit selection.
std::string select_preset(const AudioScene& scene, const UserState& user);

double clamp_gain(const InteractivityLimits& limits, double requested_db);

/// Applies a listener position offset within limits. The azimuth offset is
/// wrapped to (-180, 180] before it is bounded by the azimuth range.
Position clamp_position(const InteractivityLimits& limits, const Position& base,
                        const PositionOffset& requested);

/// The offset actually realised by clamp_position, as stored in UserState.
PositionOffset clamp_position_offset(const InteractivityLimits& limits, const Position& base,
                                     const PositionOffset& requested);

/// Exact tag, then primary-subtag match, then the default language.
std::string resolve_label(const LabelSet& labels, std::string_view language);

/// Re-clamps every offset in `user` against the limits that apply in
/// `preset_id` and drops mutes the preset does not allow.
UserState clamp_user_state(const AudioScene& scene, const std::string& preset_id, UserState user);

}  // namespace oba
