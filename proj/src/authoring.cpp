#include "oba/authoring.hpp"

#include <cmath>

#include "oba/error.hpp"
#include "oba/render.hpp"

namespace oba {

namespace {

AudioScene framed_scene(const SceneFraming& framing) {
  AudioScene scene;
  scene.scene_id = framing.scene_id;
  scene.sample_rate = framing.sample_rate;
  scene.frame_length = framing.frame_length;
  return scene;
}

void check_track_available(std::size_t track, const SceneFraming& framing, const std::string& id) {
  if (framing.audio_channels != 0 && track >= framing.audio_channels)
    throw Error(ErrorCode::missing_audio, "component " + id + " refers to track " +
                                              std::to_string(track) + " which the audio lacks");
}

ComponentGroup bed_component(const BedSpec& bed, const SceneFraming& framing) {
  const auto layout = layout_for_channel_count(bed.tracks.size());
  if (bed.tracks.empty())
    throw Error(ErrorCode::missing_audio, "bed " + bed.component_id + " has no tracks");
  if (!layout)
    throw Error(ErrorCode::missing_audio, "bed " + bed.component_id + " needs 1, 2 or 6 tracks, got " +
                                              std::to_string(bed.tracks.size()));
  for (auto t : bed.tracks) check_track_available(t, framing, bed.component_id);
  ComponentGroup c;
  c.component_id = bed.component_id;
  c.labels = bed.labels;
  c.content_kind = bed.content_kind;
  c.tracks = bed.tracks;
  c.geometry = BedGeometry{*layout};
  return c;
}

ComponentGroup object_component(const ObjectSpec& object, const SceneFraming& framing) {
  if (!object.track)
    throw Error(ErrorCode::missing_audio, "object " + object.component_id + " has no track");
  check_track_available(*object.track, framing, object.component_id);
  ComponentGroup c;
  c.component_id = object.component_id;
  c.labels = object.labels;
  c.content_kind = object.content_kind;
  c.tracks = {*object.track};
  c.geometry = ObjectGeometry{object.position};
  return c;
}

}  // namespace

AudioScene author_dialog_plus_scene(const BedSpec& bed, const ObjectSpec& dialog,
                                    const DialogPlusOptions& options) {
  if (!(options.interactivity_db >= 0.0) || !std::isfinite(options.interactivity_db) ||
      !std::isfinite(options.dialogplus_offset_db))
    throw Error(ErrorCode::invalid_argument, "interactivity range must be a finite non-negative dB value");

  AudioScene scene = framed_scene(options.framing);
  scene.components.push_back(bed_component(bed, options.framing));
  auto voice = object_component(dialog, options.framing);
  voice.interactivity.gain_min = -options.interactivity_db;
  voice.interactivity.gain_max = options.interactivity_db;
  scene.components.push_back(std::move(voice));

  Preset standard;
  standard.preset_id = kDefaultMixPresetId;
  standard.labels = options.default_labels;
  standard.kind = {PresetKind::Tag::high_quality_loudspeakers, {}};
  standard.members = {{bed.component_id, 0.0, {}, {}}, {dialog.component_id, 0.0, {}, {}}};

  Preset enhanced;
  enhanced.preset_id = kDialogPlusPresetId;
  enhanced.labels = options.dialogplus_labels;
  enhanced.kind = {PresetKind::Tag::hearing_impaired, {}};
  enhanced.members = {{bed.component_id, 0.0, {}, {}},
                      {dialog.component_id, options.dialogplus_offset_db, {}, {}}};

  scene.presets = {std::move(standard), std::move(enhanced)};
  scene.default_preset_id = kDefaultMixPresetId;
  return scene;
}

AudioScene author_ad_scene(const BedSpec& film_mix, const ObjectSpec& ad_voice,
                           const AutomationCurve& automation, const AdOptions& options) {
  if (automation.samples.empty())
    throw Error(ErrorCode::malformed_automation, "automation curve is empty");

  AudioScene scene = framed_scene(options.framing);
  scene.components.push_back(bed_component(film_mix, options.framing));
  auto voice = object_component(ad_voice, options.framing);
  voice.interactivity.gain_min = -options.ad_gain_db;
  voice.interactivity.gain_max = options.ad_gain_db;
  voice.interactivity.azimuth_range = options.azimuth_range;
  voice.interactivity.elevation_min = options.elevation_min;
  voice.interactivity.elevation_max = options.elevation_max;
  if (auto msg = check_limits(voice.interactivity); !msg.empty())
    throw Error(ErrorCode::invalid_argument, "AD interactivity: " + msg);
  scene.components.push_back(std::move(voice));

  Preset standard;
  standard.preset_id = kDefaultPresetId;
  standard.labels = options.default_labels;
  standard.kind = {PresetKind::Tag::high_quality_loudspeakers, {}};
  standard.members = {{film_mix.component_id, 0.0, {}, {}}};

  Preset described;
  described.preset_id = kAudioDescriptionPresetId;
  described.labels = options.ad_labels;
  described.kind = {PresetKind::Tag::audio_description, {}};
  described.members = {
      {film_mix.component_id, 0.0,
       simplify_automation(automation, options.epsilon_db, film_mix.component_id + "_ducking"), {}},
      {ad_voice.component_id, 0.0, {}, {}}};

  scene.presets = {std::move(standard), std::move(described)};
  scene.default_preset_id = kDefaultPresetId;
  return scene;
}

namespace {

LoudnessMeasurement measure_preset(std::shared_ptr<const AudioScene> scene,
                                   std::shared_ptr<const AudioSource> audio,
                                   const std::string& preset_id) {
  UserState user;
  user.selected_preset = preset_id;
  user.target_layout = LayoutId::stereo_2_0;
  RenderSettings settings;
  settings.loudness_compensation = false;
  settings.drc = false;
  const int rate = audio->sample_rate();
  Renderer renderer(std::move(scene), std::move(audio), settings);
  renderer.set_user_state(user);
  DoubleBuffer signal(2, renderer.frame_count() * renderer.frame_length());
  for (std::size_t f = 0; f < renderer.frame_count(); ++f) {
    const auto frame = renderer.render_frame(f);
    for (std::size_t c = 0; c < 2; ++c) {
      auto src = frame.channel(c);
      std::copy(src.begin(), src.end(),
                signal.channel(c).begin() + static_cast<std::ptrdiff_t>(f * renderer.frame_length()));
    }
  }
  return measure_integrated(signal, LayoutId::stereo_2_0, rate);
}

constexpr const char* kSoloPresetId = "__solo__";

}  // namespace

AudioScene stamp_loudness(const AudioScene& scene, std::shared_ptr<const AudioSource> audio) {
  if (!audio) throw Error(ErrorCode::missing_audio, "no audio to measure");
  if (audio->channel_count() < scene.track_span())
    throw Error(ErrorCode::missing_audio, "audio lacks tracks referenced by the scene");

  AudioScene stamped = scene;
  for (auto& component : stamped.components) {
    AudioScene solo = scene;
    Preset preset;
    preset.preset_id = kSoloPresetId;
    preset.labels = make_labels("solo");
    preset.kind = {PresetKind::Tag::other, "solo"};
    preset.members = {{component.component_id, 0.0, {}, {}}};
    solo.presets.push_back(std::move(preset));
    component.loudness =
        measure_preset(std::make_shared<const AudioScene>(std::move(solo)), audio, kSoloPresetId);
  }
  auto shared = std::make_shared<const AudioScene>(scene);
  for (auto& preset : stamped.presets) {
    const auto m = measure_preset(shared, audio, preset.preset_id);
    preset.measured_loudness = m.valid ? std::optional<double>(m.integrated) : std::nullopt;
  }
  return stamped;
}

namespace {

UserState extreme_user(const AudioScene& scene, const Preset& preset, bool maximum) {
  UserState user;
  user.selected_preset = preset.preset_id;
  for (const auto& m : preset.members) {
    const auto* c = scene.find_component(m.component_id);
    if (!c) continue;
    const auto limits = effective_limits(scene, preset, m.component_id);
    if (limits.allows_gain()) user.gain_offsets[m.component_id] = maximum ? limits.gain_max : limits.gain_min;
    if (c->is_object() && limits.allows_position())
      user.position_offsets[m.component_id] =
          maximum ? PositionOffset{limits.azimuth_range, limits.elevation_max}
                  : PositionOffset{-limits.azimuth_range, limits.elevation_min};
  }
  return user;
}

}  // namespace

MonitorReport monitor_report(const AudioScene& scene, std::shared_ptr<const AudioSource> audio,
                             const std::vector<std::string>& layouts) {
  MonitorReport report;
  std::vector<LayoutId> targets;
  for (const auto& name : layouts) {
    if (auto id = parse_layout(name))
      targets.push_back(*id);
    else
      report.notes.push_back("layout " + name + " is not supported; omitted");
  }
  auto shared = std::make_shared<const AudioScene>(scene);
  RenderSettings settings;
  settings.drc = false;
  for (const auto& preset : scene.presets) {
    const std::pair<const char*, UserState> cases[] = {
        {"default", [&] {
           UserState u;
           u.selected_preset = preset.preset_id;
           return u;
         }()},
        {"all-min", extreme_user(scene, preset, false)},
        {"all-max", extreme_user(scene, preset, true)},
    };
    for (auto layout : targets) {
      for (const auto& [name, base_user] : cases) {
        UserState user = base_user;
        user.target_layout = layout;
        try {
          auto result = render_offline(shared, audio, user, settings);
          report.rows.push_back({preset.preset_id, layout, name, result.stats.clipped_samples,
                                 result.stats.integrated_loudness, user.target_loudness});
        } catch (const Error& e) {
          report.notes.push_back("preset " + preset.preset_id + " on " +
                                 std::string(layout_name(layout)) + " (" + name + "): " + e.what());
        }
      }
    }
  }
  return report;
}

}  // namespace oba
