#include "oba/player_protocol.hpp"

#include <cmath>

#include "oba/error.hpp"

namespace oba {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json limits_to_json(const InteractivityLimits& l) {
  return {{"gain_min_db", l.gain_min},          {"gain_max_db", l.gain_max},
          {"azimuth_range_deg", l.azimuth_range}, {"elevation_min_deg", l.elevation_min},
          {"elevation_max_deg", l.elevation_max}, {"on_off_allowed", l.on_off_allowed}};
}

[[noreturn]] void schema_fail(const std::string& pointer, const std::string& message) {
  throw Error(ErrorCode::schema_error, message, pointer);
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) schema_fail(std::string("/") + name, std::string("missing field ") + name);
  return j.at(name);
}

std::string string_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) schema_fail(std::string("/") + name, std::string(name) + " must be a string");
  return v.get<std::string>();
}

double number_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) schema_fail(std::string("/") + name, std::string(name) + " must be a number");
  return v.get<double>();
}

bool bool_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_boolean()) schema_fail(std::string("/") + name, std::string(name) + " must be a boolean");
  return v.get<bool>();
}

std::optional<std::string> nullable_string(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return string_field(j, name);
}

std::vector<PresetKind> kinds_from_json(const json& j, const std::string& pointer) {
  if (!j.is_array()) schema_fail(pointer, "kinds must be an array");
  std::vector<PresetKind> kinds;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto where = pointer + "/" + std::to_string(i);
    if (!j[i].is_string()) schema_fail(where, "preset kind must be a string");
    auto kind = parse_preset_kind(j[i].get<std::string>());
    if (!kind) schema_fail(where, "unknown preset kind " + j[i].get<std::string>());
    kinds.push_back(*kind);
  }
  return kinds;
}

json kinds_to_json(const std::vector<PresetKind>& kinds) {
  json out = json::array();
  for (const auto& k : kinds) out.push_back(preset_kind_name(k));
  return out;
}

LayoutId layout_from_json(const json& j, const char* name) {
  auto text = string_field(j, name);
  auto layout = parse_layout(text);
  if (!layout) schema_fail(std::string("/") + name, "unknown layout " + text);
  return *layout;
}

}  // namespace

json user_state_to_json(const UserState& user) {
  json gains = json::object();
  for (const auto& [id, g] : user.gain_offsets) gains[id] = g;
  json positions = json::object();
  for (const auto& [id, p] : user.position_offsets)
    positions[id] = {{"azimuth", p.azimuth}, {"elevation", p.elevation}};
  json muted = json::array();
  for (const auto& id : user.muted) muted.push_back(id);
  return {{"selected_preset", user.selected_preset ? json(*user.selected_preset) : json(nullptr)},
          {"kind_preferences", kinds_to_json(user.kind_preferences)},
          {"gain_offsets_db", gains},
          {"position_offsets", positions},
          {"muted", muted},
          {"layout", layout_name(user.target_layout)},
          {"target_loudness_lkfs", user.target_loudness},
          {"drc_profile", user.drc_profile ? json(*user.drc_profile) : json(nullptr)}};
}

json state_to_json(const PlayerState& state) {
  json out = {{"loaded", state.loaded()},
              {"source", state.source},
              {"transport", transport_name(state.transport)},
              {"position", state.position},
              {"frame_count", state.frame_count},
              {"active_preset", state.active_preset},
              {"ui_language", state.ui_language},
              {"user", user_state_to_json(state.user)},
              {"meters",
               {{"momentary_lkfs", finite_or_null(state.meters.momentary_lkfs)},
                {"clip_count", state.meters.clip_count}}}};
  if (!state.loaded()) {
    out["presets"] = json::array();
    out["components"] = json::array();
    out["drc_profiles"] = json::array();
    return out;
  }
  const auto& scene = *state.scene;
  out["scene_id"] = scene.scene_id;
  out["sample_rate"] = scene.sample_rate;
  out["frame_length"] = scene.frame_length;

  json presets = json::array();
  for (const auto& p : scene.presets)
    presets.push_back({{"id", p.preset_id},
                       {"label", resolve_label(p.labels, state.ui_language)},
                       {"kind", preset_kind_name(p.kind)}});
  out["presets"] = presets;

  // controls reflect the limits in force for the active preset
  const auto* active = scene.find_preset(state.active_preset);
  json components = json::array();
  for (const auto& c : scene.components) {
    const bool member = active && active->find_member(c.component_id);
    json entry = {{"id", c.component_id},
                  {"label", resolve_label(c.labels, state.ui_language)},
                  {"content_kind", content_kind_name(c.content_kind)},
                  {"active", member},
                  {"is_object", std::holds_alternative<ObjectGeometry>(c.geometry)}};
    entry["limits"] = limits_to_json(active ? effective_limits(scene, *active, c.component_id)
                                            : c.interactivity);
    auto g = state.user.gain_offsets.find(c.component_id);
    entry["gain_db"] = g == state.user.gain_offsets.end() ? 0.0 : g->second;
    auto p = state.user.position_offsets.find(c.component_id);
    entry["position_offset"] = p == state.user.position_offsets.end()
                                   ? json{{"azimuth", 0.0}, {"elevation", 0.0}}
                                   : json{{"azimuth", p->second.azimuth}, {"elevation", p->second.elevation}};
    entry["muted"] = state.user.muted.count(c.component_id) > 0;
    components.push_back(std::move(entry));
  }
  out["components"] = components;

  json profiles = json::array();
  for (const auto& p : builtin_drc_profiles()) profiles.push_back(p.profile_id);
  for (const auto& p : scene.drc_profiles)
    if (std::find(profiles.begin(), profiles.end(), json(p.profile_id)) == profiles.end())
      profiles.push_back(p.profile_id);
  out["drc_profiles"] = profiles;
  return out;
}

json event_to_json(const PlayerEvent& event) {
  json out;
  switch (event.type) {
    case PlayerEvent::Type::state_changed: out["type"] = "state_changed"; break;
    case PlayerEvent::Type::error: out["type"] = "error"; break;
    case PlayerEvent::Type::eof: out["type"] = "eof"; break;
  }
  out["cause"] = event.cause;
  if (!event.echo.is_null()) out["applied"] = event.echo;
  if (!event.code.empty()) out["code"] = event.code;
  if (!event.message.empty()) out["message"] = event.message;
  if (event.state) out["state"] = state_to_json(*event.state);
  return out;
}

ControlCommand command_from_json(const json& j) {
  if (!j.is_object()) schema_fail("", "command must be an object");
  const auto type = string_field(j, "type");
  if (type == "load") return command::Load{string_field(j, "path")};
  if (type == "play") return command::Play{};
  if (type == "pause") return command::Pause{};
  if (type == "seek") {
    const auto& v = field(j, "frame");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      schema_fail("/frame", "frame must be a non-negative integer");
    return command::Seek{v.get<std::size_t>()};
  }
  if (type == "select_preset") return command::SelectPreset{nullable_string(j, "preset_id").value_or("")};
  if (type == "set_kind_preferences")
    return command::SetKindPreferences{kinds_from_json(field(j, "kinds"), "/kinds")};
  if (type == "set_gain") return command::SetGain{string_field(j, "component"), number_field(j, "gain_db")};
  if (type == "set_position")
    return command::SetPosition{string_field(j, "component"), number_field(j, "azimuth"),
                                number_field(j, "elevation")};
  if (type == "set_mute") return command::SetMute{string_field(j, "component"), bool_field(j, "muted")};
  if (type == "set_layout") return command::SetLayout{layout_from_json(j, "layout")};
  if (type == "set_target_loudness") return command::SetTargetLoudness{number_field(j, "lkfs")};
  if (type == "set_drc") return command::SetDrc{nullable_string(j, "profile")};
  if (type == "set_ui_language") return command::SetUiLanguage{string_field(j, "language")};
  schema_fail("/type", "unknown command type " + type);
}

json command_to_json(const ControlCommand& command) {
  json out = {{"type", command_name(command)}};
  std::visit(
      [&out](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, command::Load>) out["path"] = c.path;
        if constexpr (std::is_same_v<T, command::Seek>) out["frame"] = c.frame;
        if constexpr (std::is_same_v<T, command::SelectPreset>)
          out["preset_id"] = c.preset_id.empty() ? json(nullptr) : json(c.preset_id);
        if constexpr (std::is_same_v<T, command::SetKindPreferences>) out["kinds"] = kinds_to_json(c.kinds);
        if constexpr (std::is_same_v<T, command::SetGain>) {
          out["component"] = c.component_id;
          out["gain_db"] = c.gain_db;
        }
        if constexpr (std::is_same_v<T, command::SetPosition>) {
          out["component"] = c.component_id;
          out["azimuth"] = c.azimuth;
          out["elevation"] = c.elevation;
        }
        if constexpr (std::is_same_v<T, command::SetMute>) {
          out["component"] = c.component_id;
          out["muted"] = c.muted;
        }
        if constexpr (std::is_same_v<T, command::SetLayout>) out["layout"] = layout_name(c.layout);
        if constexpr (std::is_same_v<T, command::SetTargetLoudness>) out["lkfs"] = c.lkfs;
        if constexpr (std::is_same_v<T, command::SetDrc>)
          out["profile"] = c.profile_id ? json(*c.profile_id) : json(nullptr);
        if constexpr (std::is_same_v<T, command::SetUiLanguage>) out["language"] = c.language;
      },
      command);
  return out;
}

json preferences_to_json(const PlayerState& state) {
  return {{"kind_preferences", kinds_to_json(state.user.kind_preferences)},
          {"layout", layout_name(state.user.target_layout)},
          {"target_loudness_lkfs", state.user.target_loudness},
          {"drc_profile", state.user.drc_profile ? json(*state.user.drc_profile) : json(nullptr)},
          {"ui_language", state.ui_language}};
}

void apply_preferences(const json& j, PlayerState& state) {
  if (!j.is_object()) schema_fail("", "preferences must be an object");
  if (j.contains("kind_preferences"))
    state.user.kind_preferences = kinds_from_json(j.at("kind_preferences"), "/kind_preferences");
  if (j.contains("layout")) state.user.target_layout = layout_from_json(j, "layout");
  if (j.contains("target_loudness_lkfs")) {
    const double t = number_field(j, "target_loudness_lkfs");
    if (std::isfinite(t)) state.user.target_loudness = std::clamp(t, -70.0, 0.0);
  }
  if (j.contains("drc_profile")) state.user.drc_profile = nullable_string(j, "drc_profile");
  if (j.contains("ui_language")) state.ui_language = string_field(j, "ui_language");
}

}  // namespace oba
