#include "oba/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "oba/error.hpp"

namespace oba {

double normalize_azimuth(double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a > 180.0) a -= 360.0;
  if (a <= -180.0) a += 360.0;
  return a;
}

bool InteractivityLimits::within(const InteractivityLimits& outer) const {
  return gain_min >= outer.gain_min && gain_max <= outer.gain_max &&
         azimuth_range <= outer.azimuth_range && elevation_min >= outer.elevation_min &&
         elevation_max <= outer.elevation_max && (!on_off_allowed || outer.on_off_allowed);
}

std::string check_limits(const InteractivityLimits& l) {
  for (double v : {l.gain_min, l.gain_max, l.azimuth_range, l.elevation_min, l.elevation_max})
    if (!std::isfinite(v)) return "limit is not finite";
  if (!(l.gain_min <= 0.0 && 0.0 <= l.gain_max)) return "gain range must contain 0 dB";
  if (!(l.azimuth_range >= 0.0 && l.azimuth_range <= 180.0))
    return "azimuth range must lie in [0, 180]";
  if (!(-90.0 <= l.elevation_min && l.elevation_min <= l.elevation_max && l.elevation_max <= 90.0))
    return "elevation range must satisfy -90 <= min <= max <= 90";
  return {};
}

LabelSet make_labels(std::string english) {
  LabelSet labels;
  labels.default_language = "en";
  labels.entries["en"] = std::move(english);
  return labels;
}

std::string_view content_kind_name(ContentKind kind) {
  switch (kind) {
    case ContentKind::dialogue: return "dialogue";
    case ContentKind::music: return "music";
    case ContentKind::effects: return "effects";
    case ContentKind::audio_description: return "audio_description";
    case ContentKind::spoken_subtitles: return "spoken_subtitles";
    case ContentKind::mixed_bed: return "mixed_bed";
  }
  return "dialogue";
}

std::optional<ContentKind> parse_content_kind(std::string_view name) {
  for (auto k : {ContentKind::dialogue, ContentKind::music, ContentKind::effects,
                 ContentKind::audio_description, ContentKind::spoken_subtitles,
                 ContentKind::mixed_bed})
    if (content_kind_name(k) == name) return k;
  return std::nullopt;
}

namespace {

constexpr std::pair<PresetKind::Tag, std::string_view> kKindNames[] = {
    {PresetKind::Tag::default_mix, "default"},
    {PresetKind::Tag::high_quality_loudspeakers, "high_quality_loudspeakers"},
    {PresetKind::Tag::hearing_impaired, "hearing_impaired"},
    {PresetKind::Tag::audio_description, "audio_description"},
    {PresetKind::Tag::spoken_subtitles, "spoken_subtitles"},
    {PresetKind::Tag::simplified_language, "simplified_language"},
};

}  // namespace

std::string preset_kind_name(const PresetKind& kind) {
  if (kind.tag == PresetKind::Tag::other) return "other:" + kind.other_name;
  for (const auto& [tag, name] : kKindNames)
    if (tag == kind.tag) return std::string(name);
  return "default";
}

std::optional<PresetKind> parse_preset_kind(std::string_view name) {
  if (name.starts_with("other:")) {
    name.remove_prefix(6);
    if (name.empty()) return std::nullopt;
    return PresetKind{PresetKind::Tag::other, std::string(name)};
  }
  for (const auto& [tag, n] : kKindNames)
    if (n == name) return PresetKind{tag, {}};
  return std::nullopt;
}

const PresetMember* Preset::find_member(std::string_view component_id) const {
  for (const auto& m : members)
    if (m.component_id == component_id) return &m;
  return nullptr;
}

const ComponentGroup* AudioScene::find_component(std::string_view id) const {
  for (const auto& c : components)
    if (c.component_id == id) return &c;
  return nullptr;
}

const Preset* AudioScene::find_preset(std::string_view id) const {
  for (const auto& p : presets)
    if (p.preset_id == id) return &p;
  return nullptr;
}

const DrcProfile* AudioScene::find_drc_profile(std::string_view id) const {
  for (const auto& p : drc_profiles)
    if (p.profile_id == id) return &p;
  return find_builtin_drc_profile(id);
}

std::size_t AudioScene::track_span() const {
  std::size_t span = 0;
  for (const auto& c : components)
    for (auto t : c.tracks) span = std::max(span, t + 1);
  return span;
}

InteractivityLimits effective_limits(const AudioScene& scene, const Preset& preset,
                                     std::string_view component_id) {
  if (const auto* m = preset.find_member(component_id); m && m->interactivity_override)
    return *m->interactivity_override;
  if (const auto* c = scene.find_component(component_id)) return c->interactivity;
  return {};
}

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(
      issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::error; }));
}

std::size_t ValidationReport::warning_count() const { return issues.size() - error_count(); }

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.code == code; });
}

namespace {

class ReportBuilder {
 public:
  void error(std::string code, std::string path, std::string message) {
    report_.issues.push_back({Severity::error, std::move(code), std::move(path), std::move(message)});
  }
  void warning(std::string code, std::string path, std::string message) {
    report_.issues.push_back(
        {Severity::warning, std::move(code), std::move(path), std::move(message)});
  }
  ValidationReport take() { return std::move(report_); }

 private:
  ValidationReport report_;
};

void check_labels(ReportBuilder& out, const LabelSet& labels, const std::string& path) {
  if (labels.entries.empty() || !labels.entries.contains(labels.default_language))
    out.error("invalid-labels", path, "label set must contain the default language");
}

}  // namespace

ValidationReport validate_scene(const AudioScene& scene) {
  ReportBuilder out;
  if (scene.sample_rate <= 0) out.error("invalid-sample-rate", "/sample_rate", "must be positive");
  if (scene.frame_length <= 0)
    out.error("invalid-frame-length", "/frame_length", "must be positive");

  std::set<std::string> component_ids;
  std::map<std::size_t, std::string> track_owner;
  for (std::size_t i = 0; i < scene.components.size(); ++i) {
    const auto& c = scene.components[i];
    const std::string path = "/components/" + std::to_string(i);
    if (!component_ids.insert(c.component_id).second)
      out.error("duplicate-component-id", path + "/id", "duplicate component id " + c.component_id);
    check_labels(out, c.labels, path + "/labels");
    if (auto msg = check_limits(c.interactivity); !msg.empty())
      out.error("invalid-limits", path + "/interactivity", msg);
    if (!std::isfinite(c.default_gain))
      out.error("invalid-gain", path + "/default_gain_db", "gain is not finite");

    std::size_t expected_tracks = 1;
    if (const auto* obj = std::get_if<ObjectGeometry>(&c.geometry)) {
      const auto& p = obj->position;
      if (!(p.azimuth > -180.0 && p.azimuth <= 180.0) ||
          !(p.elevation >= -90.0 && p.elevation <= 90.0) || !(p.distance >= 0.0) ||
          !std::isfinite(p.distance))
        out.error("invalid-position", path + "/geometry/position", "position out of range");
    } else {
      expected_tracks = speaker_layout(std::get<BedGeometry>(c.geometry).layout).channel_count();
    }
    if (c.tracks.size() != expected_tracks)
      out.error("geometry-track-mismatch", path + "/tracks",
                "expected " + std::to_string(expected_tracks) + " track(s)");
    for (auto t : c.tracks) {
      auto [it, inserted] = track_owner.emplace(t, c.component_id);
      if (!inserted && it->second != c.component_id)
        out.error("overlapping-tracks", path + "/tracks",
                  "track " + std::to_string(t) + " already used by " + it->second);
      else if (!inserted)
        out.error("overlapping-tracks", path + "/tracks", "track listed twice");
    }
  }

  if (scene.presets.empty()) out.error("empty-presets", "/presets", "scene has no presets");
  std::set<std::string> preset_ids;
  std::set<std::string> referenced;
  std::set<PresetKind> kinds;
  for (std::size_t i = 0; i < scene.presets.size(); ++i) {
    const auto& p = scene.presets[i];
    const std::string path = "/presets/" + std::to_string(i);
    if (!preset_ids.insert(p.preset_id).second)
      out.error("duplicate-preset-id", path + "/id", "duplicate preset id " + p.preset_id);
    if (p.kind.tag != PresetKind::Tag::other && !kinds.insert(p.kind).second)
      out.error("duplicate-preset-kind", path + "/kind",
                "preset kind " + preset_kind_name(p.kind) + " used twice");
    check_labels(out, p.labels, path + "/labels");
    if (p.members.empty()) out.error("empty-members", path + "/members", "preset has no members");
    if (!p.measured_loudness || !std::isfinite(*p.measured_loudness))
      out.error("missing-loudness", path + "/measured_loudness_lkfs",
                "preset loudness has not been measured");

    std::set<std::string> seen;
    for (std::size_t m = 0; m < p.members.size(); ++m) {
      const auto& member = p.members[m];
      const std::string mpath = path + "/members/" + std::to_string(m);
      if (!seen.insert(member.component_id).second)
        out.error("duplicate-member", mpath, "component listed twice in preset");
      referenced.insert(member.component_id);
      const auto* comp = scene.find_component(member.component_id);
      if (!comp) {
        out.error("dangling-component-ref", mpath + "/component_id",
                  "unknown component " + member.component_id);
        continue;
      }
      if (!std::isfinite(member.static_gain))
        out.error("invalid-gain", mpath + "/static_gain_db", "gain is not finite");
      if (member.dynamic_gain) {
        if (auto msg = check_track(*member.dynamic_gain); !msg.empty())
          out.error("invalid-dynamic-gain", mpath + "/dynamic_gain", msg);
      }
      if (member.interactivity_override) {
        if (auto msg = check_limits(*member.interactivity_override); !msg.empty())
          out.error("invalid-limits", mpath + "/interactivity_override", msg);
        else if (!member.interactivity_override->within(comp->interactivity))
          out.error("override-not-subrange", mpath + "/interactivity_override",
                    "override exceeds the component's limits");
      }
    }
  }
  if (!scene.presets.empty() && !scene.find_preset(scene.default_preset_id))
    out.error("default-preset-missing", "/default_preset_id",
              "default preset " + scene.default_preset_id + " does not exist");

  for (std::size_t i = 0; i < scene.components.size(); ++i)
    if (!referenced.contains(scene.components[i].component_id))
      out.error("orphan-component", "/components/" + std::to_string(i),
                "component " + scene.components[i].component_id + " is in no preset");

  for (std::size_t i = 0; i < scene.drc_profiles.size(); ++i)
    if (auto msg = check_drc_profile(scene.drc_profiles[i]); !msg.empty())
      out.error("invalid-drc-profile", "/drc_profiles/" + std::to_string(i), msg);

  // Every language offered anywhere should be offered everywhere.
  std::set<std::string> languages;
  for (const auto& c : scene.components)
    for (const auto& [lang, _] : c.labels.entries) languages.insert(lang);
  for (const auto& p : scene.presets)
    for (const auto& [lang, _] : p.labels.entries) languages.insert(lang);
  auto warn_missing = [&](const LabelSet& labels, const std::string& path) {
    for (const auto& lang : languages)
      if (!labels.entries.contains(lang))
        out.warning("missing-label", path, "no label for language " + lang);
  };
  for (std::size_t i = 0; i < scene.components.size(); ++i)
    warn_missing(scene.components[i].labels, "/components/" + std::to_string(i) + "/labels");
  for (std::size_t i = 0; i < scene.presets.size(); ++i)
    warn_missing(scene.presets[i].labels, "/presets/" + std::to_string(i) + "/labels");

  return out.take();
}

std::string select_preset(const AudioScene& scene, const UserState& user) {
  if (user.selected_preset) {
    if (!scene.find_preset(*user.selected_preset))
      throw Error(ErrorCode::preset_not_found, "no preset with id " + *user.selected_preset);
    return *user.selected_preset;
  }
  for (const auto& kind : user.kind_preferences) {
    if (kind.tag == PresetKind::Tag::other) continue;
    for (const auto& p : scene.presets)
      if (p.kind == kind) return p.preset_id;
  }
  return scene.default_preset_id;
}

double clamp_gain(const InteractivityLimits& limits, double requested_db) {
  if (std::isnan(requested_db)) return 0.0;
  return std::min(std::max(requested_db, limits.gain_min), limits.gain_max);
}

PositionOffset clamp_position_offset(const InteractivityLimits& limits, const Position& base,
                                     const PositionOffset& requested) {
  PositionOffset off;
  const double az = std::isfinite(requested.azimuth) ? normalize_azimuth(requested.azimuth) : 0.0;
  off.azimuth = std::clamp(az, -limits.azimuth_range, limits.azimuth_range);
  const double el = std::isfinite(requested.elevation) ? requested.elevation : 0.0;
  const double lo = std::max(limits.elevation_min, -90.0 - base.elevation);
  const double hi = std::min(limits.elevation_max, 90.0 - base.elevation);
  off.elevation = lo <= hi ? std::clamp(el, lo, hi) : 0.0;
  return off;
}

Position clamp_position(const InteractivityLimits& limits, const Position& base,
                        const PositionOffset& requested) {
  const auto off = clamp_position_offset(limits, base, requested);
  Position out = base;
  out.azimuth = normalize_azimuth(base.azimuth + off.azimuth);
  out.elevation = std::clamp(base.elevation + off.elevation, -90.0, 90.0);
  return out;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::string primary_subtag(std::string_view tag) {
  auto cut = tag.find_first_of("-_");
  return lower(tag.substr(0, cut));
}

}  // namespace

std::string resolve_label(const LabelSet& labels, std::string_view language) {
  const std::string wanted = lower(language);
  for (const auto& [tag, text] : labels.entries)
    if (lower(tag) == wanted) return text;
  const std::string primary = primary_subtag(language);
  for (const auto& [tag, text] : labels.entries)
    if (primary_subtag(tag) == primary) return text;
  if (auto it = labels.entries.find(labels.default_language); it != labels.entries.end())
    return it->second;
  return labels.entries.empty() ? std::string{} : labels.entries.begin()->second;
}

UserState clamp_user_state(const AudioScene& scene, const std::string& preset_id, UserState user) {
  const Preset* preset = scene.find_preset(preset_id);
  auto limits_for = [&](const ComponentGroup& c) {
    return preset ? effective_limits(scene, *preset, c.component_id) : c.interactivity;
  };
  for (auto it = user.gain_offsets.begin(); it != user.gain_offsets.end();) {
    const auto* c = scene.find_component(it->first);
    if (!c) {
      it = user.gain_offsets.erase(it);
      continue;
    }
    it->second = clamp_gain(limits_for(*c), it->second);
    ++it;
  }
  for (auto it = user.position_offsets.begin(); it != user.position_offsets.end();) {
    const auto* c = scene.find_component(it->first);
    const auto* obj = c ? std::get_if<ObjectGeometry>(&c->geometry) : nullptr;
    if (!obj) {
      it = user.position_offsets.erase(it);
      continue;
    }
    it->second = clamp_position_offset(limits_for(*c), obj->position, it->second);
    ++it;
  }
  for (auto it = user.muted.begin(); it != user.muted.end();) {
    const auto* c = scene.find_component(*it);
    if (!c || !limits_for(*c).on_off_allowed)
      it = user.muted.erase(it);
    else
      ++it;
  }
  return user;
}

}  // namespace oba
