#include "oba/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include "oba/authoring.hpp"
#include "oba/container.hpp"
#include "oba/error.hpp"
#include "oba/http_service.hpp"
#include "oba/loudness.hpp"
#include "oba/player.hpp"
#include "oba/player_protocol.hpp"
#include "oba/render.hpp"
#include "oba/scene_json.hpp"
#include "oba/wav.hpp"

namespace oba {

std::atomic<bool> g_stop_requested{false};

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailure = 2;

ordered_json lkfs_json(const LoudnessMeasurement& m) {
  return m.valid ? ordered_json(round_centi(m.integrated)) : ordered_json(nullptr);
}

struct ChannelRef {
  std::string path;
  std::vector<std::size_t> channels;
};

// "file.wav:0,1" or "file.wav:0-5"; channel indices are zero based.
ChannelRef parse_channel_ref(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw Error(ErrorCode::invalid_argument, "expected <wav>:<channels>, got " + text);
  ChannelRef ref{text.substr(0, colon), {}};
  std::stringstream list(text.substr(colon + 1));
  std::string item;
  auto number = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw Error(ErrorCode::invalid_argument, "bad channel index '" + s + "' in " + text);
    return std::stoul(s);
  };
  while (std::getline(list, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      ref.channels.push_back(number(item));
      continue;
    }
    const auto lo = number(item.substr(0, dash));
    const auto hi = number(item.substr(dash + 1));
    if (hi < lo) throw Error(ErrorCode::invalid_argument, "descending channel range in " + text);
    for (auto c = lo; c <= hi; ++c) ref.channels.push_back(c);
  }
  if (ref.channels.empty()) throw Error(ErrorCode::invalid_argument, "no channels in " + text);
  return ref;
}

std::string same_wav(const std::vector<ChannelRef>& refs) {
  for (const auto& r : refs)
    if (std::filesystem::path(r.path).lexically_normal() !=
        std::filesystem::path(refs.front().path).lexically_normal())
      throw Error(ErrorCode::invalid_argument,
                  "all channel references must name the same WAV file (" + refs.front().path + " vs " +
                      r.path + ")");
  return refs.front().path;
}

void print_report(const ValidationReport& report, std::ostream& err) {
  for (const auto& issue : report.issues)
    err << (issue.severity == Severity::error ? "error" : "warning") << " " << issue.code << " "
        << (issue.path.empty() ? "/" : issue.path) << ": " << issue.message << "\n";
}

// Stamps loudness from the audio, validates and saves. Returns the exit code.
int finish_authoring(AudioScene scene, const WavData& wav, const std::string& out_path,
                     std::ostream& out, std::ostream& err) {
  auto audio = std::make_shared<MemoryAudioSource>(wav.samples, wav.sample_rate,
                                                   static_cast<std::size_t>(scene.frame_length));
  scene = stamp_loudness(scene, audio);
  const auto report = validate_scene(scene);
  print_report(report, err);
  if (!report.ok()) return kExitInvalid;
  save_scene_file(out_path, scene);
  ordered_json summary = {{"scene", out_path}, {"presets", ordered_json::array()}};
  for (const auto& p : scene.presets)
    summary["presets"].push_back(
        {{"id", p.preset_id},
         {"kind", preset_kind_name(p.kind)},
         {"measured_loudness_lkfs",
          p.measured_loudness ? ordered_json(round_centi(*p.measured_loudness)) : ordered_json(nullptr)}});
  out << summary.dump(2) << "\n";
  return kExitOk;
}

SceneFraming framing_for(const std::string& out_path, const std::string& scene_id, const WavData& wav,
                         int frame_length) {
  SceneFraming f;
  f.scene_id = scene_id.empty() ? std::filesystem::path(out_path).stem().string() : scene_id;
  f.sample_rate = wav.sample_rate;
  f.frame_length = frame_length;
  f.audio_channels = wav.samples.channels();
  return f;
}

struct GainRequest {
  std::string component;
  double gain_db = 0.0;
};

GainRequest parse_gain(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::invalid_argument, "expected <component>=<dB>, got " + text);
  GainRequest g{text.substr(0, eq), 0.0};
  try {
    std::size_t used = 0;
    g.gain_db = std::stod(text.substr(eq + 1), &used);
    if (used != text.size() - eq - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "bad gain value in " + text);
  }
  return g;
}

struct PositionRequest {
  std::string component;
  PositionOffset offset;
};

// "<component>=<azimuth>[,<elevation>]"
PositionRequest parse_position(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::invalid_argument, "expected <component>=<az>[,<el>], got " + text);
  PositionRequest p{text.substr(0, eq), {}};
  const auto values = text.substr(eq + 1);
  const auto comma = values.find(',');
  try {
    p.offset.azimuth = std::stod(values.substr(0, comma));
    if (comma != std::string::npos) p.offset.elevation = std::stod(values.substr(comma + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "bad position in " + text);
  }
  return p;
}

// Resolves --preset as an id first, then as a preset kind.
void apply_preset_choice(const AudioScene& scene, const std::string& choice, UserState& user) {
  if (choice.empty()) return;
  if (scene.find_preset(choice)) {
    user.selected_preset = choice;
    return;
  }
  if (auto kind = parse_preset_kind(choice)) {
    for (const auto& p : scene.presets)
      if (p.kind == *kind) {
        user.selected_preset = p.preset_id;
        return;
      }
  }
  throw Error(ErrorCode::preset_not_found, "no preset with id or kind " + choice);
}

int exit_code_for(const Error& e) { return e.code() == ErrorCode::invalid_scene ? kExitInvalid : kExitFailure; }

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object-based audio toolkit: author, validate, measure, pack, render and serve "
               "personalisable audio scenes.",
               "oba"};
  app.require_subcommand(1);
  int code = kExitOk;

  // validate
  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scene JSON file");
  validate->add_option("scene", validate_path, "Scene JSON")->required();

  // measure
  std::string measure_path, measure_layout;
  auto* measure = app.add_subcommand("measure", "Integrated loudness of a WAV file");
  measure->add_option("wav", measure_path, "WAV file")->required();
  measure->add_option("--layout", measure_layout, "mono_1_0, stereo_2_0 or surround_5_1");

  // author-dialogplus
  std::string dp_bed, dp_dialog, dp_out, dp_scene_id;
  double dp_offset = 6.0, dp_range = 9.0, dp_azimuth = 0.0;
  int dp_frame = 1024;
  auto* author_dp = app.add_subcommand("author-dialogplus", "Author a dialogue enhancement scene");
  author_dp->add_option("--bed", dp_bed, "Background bed as <wav>:<channels>")->required();
  author_dp->add_option("--dialog", dp_dialog, "Dialogue object as <wav>:<channel>")->required();
  author_dp->add_option("--offset-db", dp_offset, "Dialogue boost of the Dialog+ preset")->capture_default_str();
  author_dp->add_option("--range-db", dp_range, "Listener dialogue range +-dB")->capture_default_str();
  author_dp->add_option("--azimuth", dp_azimuth, "Dialogue azimuth in degrees")->capture_default_str();
  author_dp->add_option("--scene-id", dp_scene_id, "Scene id (default: output file stem)");
  author_dp->add_option("--frame-length", dp_frame, "Samples per frame")->capture_default_str();
  author_dp->add_option("-o,--output", dp_out, "Scene JSON to write")->required();

  // author-ad
  std::string ad_mix, ad_voice, ad_automation, ad_out, ad_scene_id;
  double ad_epsilon = kDefaultSimplifyEpsilonDb, ad_gain = 6.0, ad_azimuth = 0.0;
  int ad_frame = 1024;
  auto* author_ad = app.add_subcommand("author-ad", "Author an audio description scene");
  author_ad->add_option("--mix", ad_mix, "Film mix as <wav>:<channels>")->required();
  author_ad->add_option("--ad", ad_voice, "Description voice as <wav>:<channel>")->required();
  author_ad->add_option("--automation", ad_automation, "Ducking automation CSV (time_s,gain_db)")->required();
  author_ad->add_option("--epsilon-db", ad_epsilon, "Simplification tolerance")->capture_default_str();
  author_ad->add_option("--ad-gain-db", ad_gain, "Listener description range +-dB")->capture_default_str();
  author_ad->add_option("--azimuth", ad_azimuth, "Description voice azimuth in degrees")->capture_default_str();
  author_ad->add_option("--scene-id", ad_scene_id, "Scene id (default: output file stem)");
  author_ad->add_option("--frame-length", ad_frame, "Samples per frame")->capture_default_str();
  author_ad->add_option("-o,--output", ad_out, "Scene JSON to write")->required();

  // pack
  std::string pack_scene, pack_wav, pack_out;
  auto* pack_cmd = app.add_subcommand("pack", "Bundle a scene and its audio into a container");
  pack_cmd->add_option("scene", pack_scene, "Scene JSON")->required();
  pack_cmd->add_option("wav", pack_wav, "Multichannel WAV")->required();
  pack_cmd->add_option("-o,--output", pack_out, "Container to write")->required();

  // render
  std::string render_in, render_out, render_preset, render_layout = "stereo_2_0", render_drc;
  double render_target = kDefaultTargetLoudness;
  std::vector<std::string> render_gains, render_positions, render_mutes;
  bool render_no_comp = false, render_no_drc = false;
  auto* render = app.add_subcommand("render", "Render a container to WAV; prints stats JSON");
  render->add_option("container", render_in, "Container file")->required();
  render->add_option("--preset", render_preset, "Preset id or preset kind");
  render->add_option("--layout", render_layout, "Target layout")->capture_default_str();
  render->add_option("--target-lkfs", render_target, "Target loudness")->capture_default_str();
  render->add_option("--gain", render_gains, "Component gain offset <component>=<dB>");
  render->add_option("--position", render_positions, "Object offset <component>=<az>[,<el>]");
  render->add_option("--mute", render_mutes, "Mute a component");
  render->add_option("--drc", render_drc, "DRC profile id");
  render->add_flag("--no-compensation", render_no_comp, "Disable loudness compensation");
  render->add_flag("--no-drc", render_no_drc, "Bypass dynamic range control");
  render->add_option("-o,--output", render_out, "WAV to write")->required();

  // monitor
  std::string monitor_in;
  std::vector<std::string> monitor_layouts;
  auto* monitor = app.add_subcommand("monitor", "Check every preset, layout and interactivity extreme");
  monitor->add_option("container", monitor_in, "Container file")->required();
  monitor->add_option("--layout", monitor_layouts, "Restrict to these layouts");

  // serve
  std::string serve_in, serve_ui, serve_settings, serve_address = "127.0.0.1", serve_capture;
  int serve_port = 8080;
  double serve_exit_after = 0.0;
  bool serve_play = false;
  auto* serve = app.add_subcommand("serve", "Run the playback service");
  serve->add_option("container", serve_in, "Container file")->required();
  serve->add_option("--port", serve_port, "TCP port (0 picks a free one)")->capture_default_str();
  serve->add_option("--address", serve_address, "Listen address")->capture_default_str();
  serve->add_option("--ui-dir", serve_ui, "Directory with the web UI bundle");
  serve->add_option("--settings", serve_settings, "Preferences file to restore and save");
  serve->add_option("--capture", serve_capture, "Also write the rendered audio to this WAV");
  serve->add_flag("--play", serve_play, "Start playback immediately");
  serve->add_option("--exit-after", serve_exit_after, "Stop after this many seconds");

  std::vector<const char*> argv{"oba"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (*validate) {
      std::vector<std::string> warnings;
      const auto scene = load_scene_file(validate_path, &warnings);
      for (const auto& w : warnings) err << "warning unknown-field " << w << ": ignored\n";
      const auto report = validate_scene(scene);
      print_report(report, err);
      out << ordered_json{{"scene", validate_path},
                          {"ok", report.ok()},
                          {"errors", report.error_count()},
                          {"warnings", report.warning_count() + warnings.size()}}
                 .dump()
          << "\n";
      return report.ok() ? kExitOk : kExitInvalid;
    }

    if (*measure) {
      const auto wav = read_wav(measure_path);
      LayoutId layout;
      if (!measure_layout.empty()) {
        auto parsed = parse_layout(measure_layout);
        if (!parsed) throw Error(ErrorCode::invalid_argument, "unknown layout " + measure_layout);
        layout = *parsed;
      } else {
        auto guessed = layout_for_channel_count(wav.samples.channels());
        if (!guessed)
          throw Error(ErrorCode::layout_mismatch,
                      "cannot infer a layout for " + std::to_string(wav.samples.channels()) + " channels");
        layout = *guessed;
      }
      const auto m = measure_integrated(convert_buffer<double>(wav.samples), layout, wav.sample_rate);
      out << ordered_json{{"file", measure_path},
                          {"layout", layout_name(layout)},
                          {"valid", m.valid},
                          {"integrated_lkfs", lkfs_json(m)}}
                 .dump()
          << "\n";
      if (!m.valid) err << "note: signal is gated out; loudness is undefined\n";
      return kExitOk;
    }

    if (*author_dp) {
      const auto bed_ref = parse_channel_ref(dp_bed);
      const auto dialog_ref = parse_channel_ref(dp_dialog);
      if (dialog_ref.channels.size() != 1)
        throw Error(ErrorCode::invalid_argument, "the dialogue object takes exactly one channel");
      const auto wav = read_wav(same_wav({bed_ref, dialog_ref}));
      BedSpec bed;
      bed.tracks = bed_ref.channels;
      ObjectSpec dialog;
      dialog.track = dialog_ref.channels.front();
      dialog.position.azimuth = dp_azimuth;
      DialogPlusOptions options;
      options.dialogplus_offset_db = dp_offset;
      options.interactivity_db = dp_range;
      options.framing = framing_for(dp_out, dp_scene_id, wav, dp_frame);
      return finish_authoring(author_dialog_plus_scene(bed, dialog, options), wav, dp_out, out, err);
    }

    if (*author_ad) {
      const auto mix_ref = parse_channel_ref(ad_mix);
      const auto voice_ref = parse_channel_ref(ad_voice);
      if (voice_ref.channels.size() != 1)
        throw Error(ErrorCode::invalid_argument, "the description voice takes exactly one channel");
      const auto wav = read_wav(same_wav({mix_ref, voice_ref}));
      const auto automation = load_automation_csv(ad_automation);
      BedSpec film;
      film.component_id = "film";
      film.labels = make_labels("Film mix");
      film.tracks = mix_ref.channels;
      ObjectSpec voice;
      voice.component_id = "description";
      voice.labels = make_labels("Audio description");
      voice.track = voice_ref.channels.front();
      voice.position.azimuth = ad_azimuth;
      voice.content_kind = ContentKind::audio_description;
      AdOptions options;
      options.epsilon_db = ad_epsilon;
      options.ad_gain_db = ad_gain;
      options.framing = framing_for(ad_out, ad_scene_id, wav, ad_frame);
      return finish_authoring(author_ad_scene(film, voice, automation, options), wav, ad_out, out, err);
    }

    if (*pack_cmd) {
      std::vector<std::string> warnings;
      const auto scene = load_scene_file(pack_scene, &warnings);
      for (const auto& w : warnings) err << "warning unknown-field " << w << ": ignored\n";
      const auto report = validate_scene(scene);
      print_report(report, err);
      if (!report.ok()) return kExitInvalid;
      pack(scene, pack_wav, pack_out);
      out << ordered_json{{"container", pack_out}, {"scene_id", scene.scene_id}}.dump() << "\n";
      return kExitOk;
    }

    if (*render) {
      auto unpacked = unpack(render_in);
      for (const auto& w : unpacked.audio->warnings()) err << "warning unknown-field " << w << ": ignored\n";
      const auto& scene = *unpacked.scene;
      UserState user;
      auto layout = parse_layout(render_layout);
      if (!layout) throw Error(ErrorCode::invalid_argument, "unknown layout " + render_layout);
      user.target_layout = *layout;
      user.target_loudness = render_target;
      apply_preset_choice(scene, render_preset, user);
      if (!render_drc.empty()) {
        if (!scene.find_drc_profile(render_drc))
          throw Error(ErrorCode::invalid_argument, "unknown DRC profile " + render_drc);
        user.drc_profile = render_drc;
      }
      const auto preset_id = select_preset(scene, user);
      const auto* preset = scene.find_preset(preset_id);
      auto require_component = [&](const std::string& id) -> const ComponentGroup& {
        const auto* c = scene.find_component(id);
        if (!c) throw Error(ErrorCode::invalid_argument, "unknown component " + id);
        return *c;
      };
      for (const auto& text : render_gains) {
        const auto g = parse_gain(text);
        require_component(g.component);
        const double applied = clamp_gain(effective_limits(scene, *preset, g.component), g.gain_db);
        if (applied != g.gain_db)
          err << "warning: gain for " << g.component << " clamped from " << g.gain_db << " to " << applied
              << " dB\n";
        user.gain_offsets[g.component] = applied;
      }
      for (const auto& text : render_positions) {
        const auto p = parse_position(text);
        const auto& c = require_component(p.component);
        const auto* object = std::get_if<ObjectGeometry>(&c.geometry);
        if (!object) throw Error(ErrorCode::invalid_argument, p.component + " is not an object");
        const auto applied =
            clamp_position_offset(effective_limits(scene, *preset, p.component), object->position, p.offset);
        if (!(applied == p.offset))
          err << "warning: position of " << p.component << " clamped to azimuth " << applied.azimuth
              << ", elevation " << applied.elevation << "\n";
        user.position_offsets[p.component] = applied;
      }
      for (const auto& id : render_mutes) {
        require_component(id);
        if (!effective_limits(scene, *preset, id).on_off_allowed) {
          err << "warning: " << id << " cannot be switched off in preset " << preset_id << "\n";
          continue;
        }
        user.muted.insert(id);
      }
      RenderSettings settings;
      settings.loudness_compensation = !render_no_comp;
      settings.drc = !render_no_drc;
      const auto result = render_offline(unpacked.scene, unpacked.audio, user, settings);
      write_wav(render_out, convert_buffer<float>(result.signal), unpacked.audio->sample_rate());
      ordered_json gains = ordered_json::object();
      for (const auto& [id, g] : user.gain_offsets) gains[id] = g;
      out << ordered_json{{"output", render_out},
                          {"preset", preset_id},
                          {"layout", layout_name(user.target_layout)},
                          {"frames", result.stats.frames},
                          {"samples", result.signal.frames()},
                          {"clipped_samples", result.stats.clipped_samples},
                          {"integrated_lkfs", lkfs_json(result.stats.integrated_loudness)},
                          {"target_lkfs", user.target_loudness},
                          {"gain_offsets_db", gains}}
                 .dump()
          << "\n";
      return kExitOk;
    }

    if (*monitor) {
      auto unpacked = unpack(monitor_in);
      const auto report = monitor_layouts.empty() ? monitor_report(*unpacked.scene, unpacked.audio)
                                                  : monitor_report(*unpacked.scene, unpacked.audio, monitor_layouts);
      ordered_json rows = ordered_json::array();
      for (const auto& r : report.rows) {
        ordered_json row = {{"preset", r.preset_id},
                            {"layout", layout_name(r.layout)},
                            {"case", r.user_case},
                            {"clipped_samples", r.clipped_samples},
                            {"integrated_lkfs", lkfs_json(r.loudness)}};
        row["deviation_lu"] = r.loudness.valid ? ordered_json(round_centi(r.loudness.integrated - r.target_loudness))
                                               : ordered_json(nullptr);
        rows.push_back(std::move(row));
      }
      out << ordered_json{{"container", monitor_in}, {"rows", rows}, {"notes", report.notes}}.dump(2) << "\n";
      return kExitOk;
    }

    if (*serve) {
      if (serve_port < 0 || serve_port > 65535)
        throw Error(ErrorCode::invalid_argument, "port out of range");
      EngineOptions engine_options;
      engine_options.realtime = true;
      engine_options.settings_path = serve_settings;
      PlayerEngine engine(engine_options);
      std::shared_ptr<WavFileSink> capture;
      if (!serve_capture.empty()) {
        capture = std::make_shared<WavFileSink>(serve_capture);
        engine.set_sink(capture);
      }
      // surface a failed load right away instead of serving an empty player
      (void)ContainerReader::open(serve_in);
      HttpServiceOptions http_options;
      http_options.address = serve_address;
      http_options.port = static_cast<std::uint16_t>(serve_port);
      http_options.ui_dir = serve_ui;
      HttpService service(engine, http_options);
      service.start();
      engine.start();
      engine.submit(command::Load{serve_in});
      if (serve_play) engine.submit(command::Play{});
      out << "listening on http://" << serve_address << ":" << service.port() << "/" << std::endl;
      const auto started = std::chrono::steady_clock::now();
      while (!g_stop_requested.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (serve_exit_after > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >= serve_exit_after)
          break;
      }
      service.stop();
      engine.stop();
      if (capture) capture->close();
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error " << e.code_name();
    if (!e.path().empty()) err << " " << e.path();
    err << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return code;
}

}  // namespace oba
