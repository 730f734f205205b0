#include "oba/scene_json.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "oba/error.hpp"

namespace oba {

using ojson = nlohmann::ordered_json;

double round_centi(double value) {
  if (!std::isfinite(value)) return value;
  const double r = std::round(value * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;
}

namespace {

constexpr std::string_view kFormatTag = "oba-scene";
constexpr int kFormatVersion = 1;

ojson labels_to_json(const LabelSet& labels) {
  ojson text = ojson::object();
  for (const auto& [lang, value] : labels.entries) text[lang] = value;
  return ojson{{"default", labels.default_language}, {"text", std::move(text)}};
}

ojson limits_to_json(const InteractivityLimits& l) {
  return ojson{{"gain_min_db", round_centi(l.gain_min)},
               {"gain_max_db", round_centi(l.gain_max)},
               {"azimuth_range_deg", l.azimuth_range},
               {"elevation_min_deg", l.elevation_min},
               {"elevation_max_deg", l.elevation_max},
               {"on_off_allowed", l.on_off_allowed}};
}

ojson track_to_json(const DynamicGainTrack& track) {
  ojson points = ojson::array();
  for (const auto& p : track.breakpoints) points.push_back(ojson::array({p.time, p.gain}));
  return ojson{{"id", track.track_id}, {"breakpoints", std::move(points)}};
}

ojson drc_to_json(const DrcProfile& p) {
  ojson curve = ojson::array();
  for (const auto& k : p.static_curve) curve.push_back(ojson::array({k.input_db, k.gain_db}));
  return ojson{{"id", p.profile_id},
               {"static_curve", std::move(curve)},
               {"attack_ms", p.attack_ms},
               {"release_ms", p.release_ms}};
}

// Reads one JSON object, tracking which keys were consumed so unknown keys
// can be reported.
class ObjectReader {
 public:
  ObjectReader(const ojson& value, std::string path, std::vector<std::string>& warnings)
      : value_(value), path_(std::move(path)), warnings_(warnings) {
    if (!value_.is_object()) fail(path_, "expected an object");
  }

  ~ObjectReader() = default;

  [[noreturn]] static void fail(const std::string& path, const std::string& message) {
    throw Error(ErrorCode::schema_error, message + " at " + (path.empty() ? "/" : path),
                path.empty() ? "/" : path);
  }

  std::string child(std::string_view key) const { return path_ + "/" + std::string(key); }

  const ojson* find(std::string_view key) {
    seen_.emplace_back(key);
    auto it = value_.find(std::string(key));
    return it == value_.end() ? nullptr : &*it;
  }

  const ojson& require(std::string_view key) {
    const ojson* v = find(key);
    if (!v) fail(child(key), "missing required field");
    return *v;
  }

  std::string string(std::string_view key) {
    const auto& v = require(key);
    if (!v.is_string()) fail(child(key), "expected a string");
    return v.get<std::string>();
  }

  double number(std::string_view key) {
    const auto& v = require(key);
    if (!v.is_number()) fail(child(key), "expected a number");
    return v.get<double>();
  }

  double number_or(std::string_view key, double fallback) {
    const ojson* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(child(key), "expected a number");
    return v->get<double>();
  }

  std::int64_t integer(std::string_view key) {
    const auto& v = require(key);
    if (!v.is_number_integer()) fail(child(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  bool boolean_or(std::string_view key, bool fallback) {
    const ojson* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(child(key), "expected a boolean");
    return v->get<bool>();
  }

  const ojson& array(std::string_view key) {
    const auto& v = require(key);
    if (!v.is_array()) fail(child(key), "expected an array");
    return v;
  }

  void finish() {
    for (const auto& [key, _] : value_.items()) {
      bool known = false;
      for (const auto& s : seen_) known = known || s == key;
      if (!known) warnings_.push_back(child(key));
    }
  }

  std::vector<std::string>& warnings() { return warnings_; }

 private:
  const ojson& value_;
  std::string path_;
  std::vector<std::string>& warnings_;
  std::vector<std::string> seen_;
};

double number_at(const ojson& v, const std::string& path) {
  if (!v.is_number()) ObjectReader::fail(path, "expected a number");
  return v.get<double>();
}

LabelSet read_labels(const ojson& v, const std::string& path, std::vector<std::string>& warnings) {
  ObjectReader r(v, path, warnings);
  LabelSet labels;
  labels.default_language = r.string("default");
  const auto& text = r.require("text");
  if (!text.is_object()) ObjectReader::fail(r.child("text"), "expected an object");
  for (const auto& [lang, value] : text.items()) {
    if (!value.is_string()) ObjectReader::fail(r.child("text") + "/" + lang, "expected a string");
    labels.entries[lang] = value.get<std::string>();
  }
  if (labels.entries.empty()) ObjectReader::fail(r.child("text"), "label set is empty");
  r.finish();
  return labels;
}

InteractivityLimits read_limits(const ojson& v, const std::string& path,
                                std::vector<std::string>& warnings) {
  ObjectReader r(v, path, warnings);
  InteractivityLimits l;
  l.gain_min = r.number_or("gain_min_db", 0.0);
  l.gain_max = r.number_or("gain_max_db", 0.0);
  l.azimuth_range = r.number_or("azimuth_range_deg", 0.0);
  l.elevation_min = r.number_or("elevation_min_deg", 0.0);
  l.elevation_max = r.number_or("elevation_max_deg", 0.0);
  l.on_off_allowed = r.boolean_or("on_off_allowed", false);
  r.finish();
  return l;
}

std::vector<GainPoint> read_pairs(const ojson& v, const std::string& path) {
  if (!v.is_array()) ObjectReader::fail(path, "expected an array");
  std::vector<GainPoint> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (!v[i].is_array() || v[i].size() != 2) ObjectReader::fail(p, "expected a [x, y] pair");
    out.push_back({number_at(v[i][0], p + "/0"), number_at(v[i][1], p + "/1")});
  }
  return out;
}

DynamicGainTrack read_track(const ojson& v, const std::string& path,
                            std::vector<std::string>& warnings) {
  ObjectReader r(v, path, warnings);
  DynamicGainTrack track;
  track.track_id = r.string("id");
  track.breakpoints = read_pairs(r.require("breakpoints"), r.child("breakpoints"));
  if (track.breakpoints.empty()) ObjectReader::fail(r.child("breakpoints"), "track has no breakpoints");
  if (auto msg = check_track(track); !msg.empty()) ObjectReader::fail(r.child("breakpoints"), msg);
  r.finish();
  return track;
}

DrcProfile read_drc(const ojson& v, const std::string& path, std::vector<std::string>& warnings) {
  ObjectReader r(v, path, warnings);
  DrcProfile p;
  p.profile_id = r.string("id");
  for (const auto& gp : read_pairs(r.require("static_curve"), r.child("static_curve")))
    p.static_curve.push_back({gp.time, gp.gain});
  p.attack_ms = r.number("attack_ms");
  p.release_ms = r.number("release_ms");
  r.finish();
  return p;
}

ComponentGroup read_component(const ojson& v, const std::string& path,
                              std::vector<std::string>& warnings) {
  ObjectReader r(v, path, warnings);
  ComponentGroup c;
  c.component_id = r.string("id");
  c.labels = read_labels(r.require("labels"), r.child("labels"), warnings);
  const auto kind = parse_content_kind(r.string("content_kind"));
  if (!kind) ObjectReader::fail(r.child("content_kind"), "unknown content kind");
  c.content_kind = *kind;
  const auto& tracks = r.array("tracks");
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!tracks[i].is_number_unsigned())
      ObjectReader::fail(r.child("tracks") + "/" + std::to_string(i), "expected a track index");
    c.tracks.push_back(tracks[i].get<std::size_t>());
  }
  {
    ObjectReader g(r.require("geometry"), r.child("geometry"), warnings);
    const std::string type = g.string("type");
    if (type == "object") {
      Position p;
      p.azimuth = g.number("azimuth");
      p.elevation = g.number("elevation");
      p.distance = g.number_or("distance", 1.0);
      c.geometry = ObjectGeometry{p};
    } else if (type == "bed") {
      const auto layout = parse_layout(g.string("layout"));
      if (!layout) ObjectReader::fail(g.child("layout"), "unknown layout");
      c.geometry = BedGeometry{*layout};
    } else {
      ObjectReader::fail(g.child("type"), "geometry type must be 'object' or 'bed'");
    }
    g.finish();
  }
  c.default_gain = r.number_or("default_gain_db", 0.0);
  if (const ojson* l = r.find("interactivity")) c.interactivity = read_limits(*l, r.child("interactivity"), warnings);
  if (const ojson* l = r.find("loudness_lkfs")) {
    if (l->is_null())
      c.loudness = LoudnessMeasurement{0.0, false};
    else
      c.loudness = LoudnessMeasurement{number_at(*l, r.child("loudness_lkfs")), true};
  }
  r.finish();
  return c;
}

Preset read_preset(const ojson& v, const std::string& path, std::vector<std::string>& warnings) {
  ObjectReader r(v, path, warnings);
  Preset p;
  p.preset_id = r.string("id");
  p.labels = read_labels(r.require("labels"), r.child("labels"), warnings);
  const auto kind = parse_preset_kind(r.string("kind"));
  if (!kind) ObjectReader::fail(r.child("kind"), "unknown preset kind");
  p.kind = *kind;
  const auto& members = r.array("members");
  if (members.empty()) ObjectReader::fail(r.child("members"), "preset has no members");
  for (std::size_t i = 0; i < members.size(); ++i) {
    ObjectReader m(members[i], r.child("members") + "/" + std::to_string(i), warnings);
    PresetMember member;
    member.component_id = m.string("component_id");
    member.static_gain = m.number_or("static_gain_db", 0.0);
    if (const ojson* d = m.find("dynamic_gain"))
      member.dynamic_gain = read_track(*d, m.child("dynamic_gain"), warnings);
    if (const ojson* o = m.find("interactivity_override"))
      member.interactivity_override = read_limits(*o, m.child("interactivity_override"), warnings);
    m.finish();
    p.members.push_back(std::move(member));
  }
  if (const ojson* l = r.find("measured_loudness_lkfs"); l && !l->is_null())
    p.measured_loudness = number_at(*l, r.child("measured_loudness_lkfs"));
  r.finish();
  return p;
}

}  // namespace

std::string write_scene_json(const AudioScene& scene) {
  ojson root;
  root["format"] = kFormatTag;
  root["version"] = kFormatVersion;
  root["scene_id"] = scene.scene_id;
  root["sample_rate"] = scene.sample_rate;
  root["frame_length"] = scene.frame_length;
  root["default_preset_id"] = scene.default_preset_id;

  ojson components = ojson::array();
  for (const auto& c : scene.components) {
    ojson j;
    j["id"] = c.component_id;
    j["labels"] = labels_to_json(c.labels);
    j["content_kind"] = content_kind_name(c.content_kind);
    j["tracks"] = c.tracks;
    if (const auto* obj = std::get_if<ObjectGeometry>(&c.geometry))
      j["geometry"] = ojson{{"type", "object"},
                            {"azimuth", obj->position.azimuth},
                            {"elevation", obj->position.elevation},
                            {"distance", obj->position.distance}};
    else
      j["geometry"] = ojson{{"type", "bed"},
                            {"layout", layout_name(std::get<BedGeometry>(c.geometry).layout)}};
    j["default_gain_db"] = round_centi(c.default_gain);
    j["interactivity"] = limits_to_json(c.interactivity);
    if (c.loudness) {
      if (c.loudness->valid)
        j["loudness_lkfs"] = round_centi(c.loudness->integrated);
      else
        j["loudness_lkfs"] = nullptr;
    }
    components.push_back(std::move(j));
  }
  root["components"] = std::move(components);

  ojson presets = ojson::array();
  for (const auto& p : scene.presets) {
    ojson j;
    j["id"] = p.preset_id;
    j["labels"] = labels_to_json(p.labels);
    j["kind"] = preset_kind_name(p.kind);
    ojson members = ojson::array();
    for (const auto& m : p.members) {
      ojson mj;
      mj["component_id"] = m.component_id;
      mj["static_gain_db"] = round_centi(m.static_gain);
      if (m.dynamic_gain) mj["dynamic_gain"] = track_to_json(*m.dynamic_gain);
      if (m.interactivity_override) mj["interactivity_override"] = limits_to_json(*m.interactivity_override);
      members.push_back(std::move(mj));
    }
    j["members"] = std::move(members);
    if (p.measured_loudness) j["measured_loudness_lkfs"] = round_centi(*p.measured_loudness);
    presets.push_back(std::move(j));
  }
  root["presets"] = std::move(presets);

  ojson drc = ojson::array();
  for (const auto& p : scene.drc_profiles) drc.push_back(drc_to_json(p));
  root["drc_profiles"] = std::move(drc);
  return root.dump(2) + "\n";
}

SceneReadResult read_scene_json(std::string_view text) {
  ojson root;
  try {
    root = ojson::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::schema_error, std::string("malformed JSON: ") + e.what(), "/");
  }
  SceneReadResult result;
  auto& warnings = result.warnings;
  ObjectReader r(root, "", warnings);
  if (const ojson* f = r.find("format"); f && (!f->is_string() || f->get<std::string>() != kFormatTag))
    ObjectReader::fail("/format", "not an oba-scene document");
  if (const ojson* v = r.find("version"); v && (!v->is_number_integer() || v->get<int>() != kFormatVersion))
    ObjectReader::fail("/version", "unsupported scene version");

  AudioScene& s = result.scene;
  s.scene_id = r.string("scene_id");
  const auto rate = r.integer("sample_rate");
  if (rate <= 0 || rate > 1'000'000) ObjectReader::fail("/sample_rate", "sample rate out of range");
  s.sample_rate = static_cast<int>(rate);
  const auto frame = r.integer("frame_length");
  if (frame <= 0 || frame > 1'000'000) ObjectReader::fail("/frame_length", "frame length out of range");
  s.frame_length = static_cast<int>(frame);
  s.default_preset_id = r.string("default_preset_id");

  const auto& components = r.array("components");
  for (std::size_t i = 0; i < components.size(); ++i)
    s.components.push_back(read_component(components[i], "/components/" + std::to_string(i), warnings));

  const auto& presets = r.array("presets");
  if (presets.empty()) ObjectReader::fail("/presets", "scene must have at least one preset");
  for (std::size_t i = 0; i < presets.size(); ++i)
    s.presets.push_back(read_preset(presets[i], "/presets/" + std::to_string(i), warnings));

  if (const ojson* d = r.find("drc_profiles")) {
    if (!d->is_array()) ObjectReader::fail("/drc_profiles", "expected an array");
    for (std::size_t i = 0; i < d->size(); ++i)
      s.drc_profiles.push_back(read_drc((*d)[i], "/drc_profiles/" + std::to_string(i), warnings));
  }
  r.finish();
  return result;
}

AudioScene load_scene_file(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  auto result = read_scene_json(ss.str());
  if (warnings) *warnings = std::move(result.warnings);
  return std::move(result.scene);
}

void save_scene_file(const std::string& path, const AudioScene& scene) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot create " + path);
  out << write_scene_json(scene);
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path);
}

}  // namespace oba
