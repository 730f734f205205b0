#include "oba/player.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oba/container.hpp"
#include "oba/error.hpp"
#include "oba/player_protocol.hpp"
#include "oba/wav.hpp"

namespace oba {

std::string_view transport_name(Transport t) {
  switch (t) {
    case Transport::stopped: return "stopped";
    case Transport::playing: return "playing";
    case Transport::paused: return "paused";
  }
  return "stopped";
}

std::string_view command_name(const ControlCommand& c) {
  static constexpr std::string_view names[] = {
      "load",     "play",     "pause",    "seek",       "select_preset",       "set_kind_preferences",
      "set_gain", "set_position", "set_mute", "set_layout", "set_target_loudness", "set_drc",
      "set_ui_language"};
  return names[c.index()];
}

namespace {

using nlohmann::json;

PlayerEvent error_event(std::string_view cause, std::string code, std::string message) {
  PlayerEvent e;
  e.type = PlayerEvent::Type::error;
  e.cause = std::string(cause);
  e.code = std::move(code);
  e.message = std::move(message);
  return e;
}

class TransitionBuilder {
 public:
  TransitionBuilder(const PlayerState& state, const ControlCommand& command, const SceneLoader& loader)
      : before_(state), next_(state), command_(command), loader_(loader) {}

  Transition run() {
    const auto cause = command_name(command_);
    if (!next_.loaded() && !std::holds_alternative<command::Load>(command_))
      return reject(error_event(cause, "no-scene", "no scene is loaded"));
    try {
      std::visit([this](const auto& c) { apply(c); }, command_);
    } catch (const Error& e) {
      return reject(error_event(cause, std::string(e.code_name()), e.what()));
    }
    if (rejected_) return reject(std::move(*rejected_));

    PlayerEvent changed;
    changed.type = PlayerEvent::Type::state_changed;
    changed.cause = std::string(cause);
    changed.echo = std::move(echo_);
    changed.state = std::make_shared<const PlayerState>(next_);
    Transition t{std::move(next_), {}};
    t.events.push_back(std::move(changed));
    for (auto& e : extra_) {
      e.state = t.events.front().state;
      t.events.push_back(std::move(e));
    }
    return t;
  }

 private:
  Transition reject(PlayerEvent event) {
    event.state = std::make_shared<const PlayerState>(before_);
    Transition t{before_, {}};
    t.events.push_back(std::move(event));
    return t;
  }

  void fail(std::string code, std::string message) {
    rejected_ = error_event(command_name(command_), std::move(code), std::move(message));
  }

  const AudioScene& scene() const { return *next_.scene; }

  // Recomputes the active preset and re-clamps the user state against it.
  void reselect() {
    next_.active_preset = select_preset(scene(), next_.user);
    next_.user = clamp_user_state(scene(), next_.active_preset, next_.user);
  }

  const ComponentGroup* component(const std::string& id) {
    const auto* c = scene().find_component(id);
    if (!c) fail("unknown-component", "no component with id " + id);
    return c;
  }

  InteractivityLimits limits(const std::string& id) const {
    const auto* preset = scene().find_preset(next_.active_preset);
    return preset ? effective_limits(scene(), *preset, id) : scene().find_component(id)->interactivity;
  }

  void apply(const command::Load& c) {
    auto loaded = loader_(c.path);
    if (!loaded.scene) throw Error(ErrorCode::io_error, "loader returned no scene");
    next_.scene = loaded.scene;
    next_.source = c.path;
    next_.frame_count = loaded.frame_count;
    next_.position = 0;
    next_.transport = Transport::stopped;
    next_.meters = {};
    next_.user.selected_preset.reset();
    next_.user.gain_offsets.clear();
    next_.user.position_offsets.clear();
    next_.user.muted.clear();
    if (next_.user.drc_profile && !scene().find_drc_profile(*next_.user.drc_profile))
      next_.user.drc_profile.reset();
    reselect();
    echo_ = {{"path", c.path}, {"frame_count", loaded.frame_count}};
  }

  void apply(const command::Play&) {
    if (next_.position >= next_.frame_count) {
      fail("eof", "playback position is at the end");
      return;
    }
    next_.transport = Transport::playing;
  }

  void apply(const command::Pause&) {
    if (next_.transport == Transport::playing) next_.transport = Transport::paused;
  }

  void apply(const command::Seek& c) {
    if (c.frame >= next_.frame_count) {
      next_.position = next_.frame_count;
      next_.transport = Transport::stopped;
      PlayerEvent e;
      e.type = PlayerEvent::Type::eof;
      e.cause = "seek";
      e.code = "eof";
      e.message = "seek past the end";
      extra_.push_back(std::move(e));
    } else {
      next_.position = c.frame;
    }
    echo_ = {{"frame", next_.position}};
  }

  void apply(const command::SelectPreset& c) {
    if (c.preset_id.empty()) {
      next_.user.selected_preset.reset();
    } else {
      if (!scene().find_preset(c.preset_id)) {
        fail("preset-not-found", "no preset with id " + c.preset_id);
        return;
      }
      next_.user.selected_preset = c.preset_id;
    }
    reselect();
    echo_ = {{"preset_id", next_.active_preset}};
  }

  void apply(const command::SetKindPreferences& c) {
    next_.user.kind_preferences = c.kinds;
    reselect();
    echo_ = {{"active_preset", next_.active_preset}};
  }

  void apply(const command::SetGain& c) {
    if (!component(c.component_id)) return;
    const double applied = clamp_gain(limits(c.component_id), c.gain_db);
    next_.user.gain_offsets[c.component_id] = applied;
    echo_ = {{"component", c.component_id}, {"requested_db", c.gain_db}, {"gain_db", applied}};
  }

  void apply(const command::SetPosition& c) {
    const auto* comp = component(c.component_id);
    if (!comp) return;
    const auto* object = std::get_if<ObjectGeometry>(&comp->geometry);
    if (!object) {
      fail("not-an-object", "component " + c.component_id + " has no position");
      return;
    }
    const auto applied = clamp_position_offset(limits(c.component_id), object->position,
                                               {c.azimuth, c.elevation});
    next_.user.position_offsets[c.component_id] = applied;
    echo_ = {{"component", c.component_id}, {"azimuth", applied.azimuth}, {"elevation", applied.elevation}};
  }

  void apply(const command::SetMute& c) {
    if (!component(c.component_id)) return;
    const bool applied = c.muted && limits(c.component_id).on_off_allowed;
    if (applied)
      next_.user.muted.insert(c.component_id);
    else
      next_.user.muted.erase(c.component_id);
    echo_ = {{"component", c.component_id}, {"muted", applied}};
  }

  void apply(const command::SetLayout& c) {
    next_.user.target_layout = c.layout;
    echo_ = {{"layout", layout_name(c.layout)}};
  }

  void apply(const command::SetTargetLoudness& c) {
    if (!std::isfinite(c.lkfs)) {
      fail("invalid-command", "target loudness must be finite");
      return;
    }
    next_.user.target_loudness = std::clamp(c.lkfs, -70.0, 0.0);
    echo_ = {{"lkfs", next_.user.target_loudness}};
  }

  void apply(const command::SetDrc& c) {
    if (c.profile_id && !c.profile_id->empty() && !scene().find_drc_profile(*c.profile_id)) {
      fail("unknown-drc-profile", "no DRC profile " + *c.profile_id);
      return;
    }
    next_.user.drc_profile = c.profile_id && !c.profile_id->empty() ? c.profile_id : std::nullopt;
    echo_ = {{"profile", next_.user.drc_profile ? json(*next_.user.drc_profile) : json(nullptr)}};
  }

  void apply(const command::SetUiLanguage& c) {
    next_.ui_language = c.language.empty() ? "en" : c.language;
    echo_ = {{"language", next_.ui_language}};
  }

  const PlayerState& before_;
  PlayerState next_;
  const ControlCommand& command_;
  const SceneLoader& loader_;
  json echo_ = json::object();
  std::optional<PlayerEvent> rejected_;
  std::vector<PlayerEvent> extra_;
};

}  // namespace

Transition handle_command(const PlayerState& state, const ControlCommand& command,
                          const SceneLoader& loader) {
  return TransitionBuilder(state, command, loader).run();
}

void CaptureSink::consume(const DoubleBuffer& block, LayoutId, int) {
  std::lock_guard lock(mutex_);
  blocks_.push_back(block);
}

std::size_t CaptureSink::frames() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.frames();
  return n;
}

DoubleBuffer CaptureSink::take() {
  std::lock_guard lock(mutex_);
  if (blocks_.empty()) return {};
  std::size_t total = 0;
  for (const auto& b : blocks_) total += b.frames();
  DoubleBuffer out(blocks_.front().channels(), total);
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    if (b.channels() != out.channels())
      throw Error(ErrorCode::layout_mismatch, "captured blocks have different channel counts");
    for (std::size_t c = 0; c < b.channels(); ++c) {
      auto src = b.channel(c);
      std::copy(src.begin(), src.end(), out.channel(c).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += b.frames();
  }
  blocks_.clear();
  return out;
}

WavFileSink::WavFileSink(std::string path) : path_(std::move(path)) {}
WavFileSink::~WavFileSink() = default;

void WavFileSink::consume(const DoubleBuffer& block, LayoutId, int sample_rate) {
  if (!writer_) writer_ = std::make_unique<WavWriter>(path_, block.channels(), sample_rate);
  writer_->write(block);
}

void WavFileSink::close() {
  if (writer_) writer_->close();
}

PlayerEngine::PlayerEngine(EngineOptions options) : options_(std::move(options)) {
  load_settings();
  publish(state_);
}

PlayerEngine::~PlayerEngine() { stop(); }

void PlayerEngine::set_sink(std::shared_ptr<AudioSink> sink) { sink_ = std::move(sink); }

void PlayerEngine::subscribe(std::function<void(const PlayerEvent&)> listener) {
  listeners_.push_back(std::move(listener));
}

void PlayerEngine::submit(ControlCommand command, Completion done) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back({std::move(command), std::move(done)});
  }
  queue_cv_.notify_one();
}

std::shared_ptr<const PlayerState> PlayerEngine::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void PlayerEngine::publish(const PlayerState& state) {
  auto snap = std::make_shared<const PlayerState>(state);
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snap);
}

void PlayerEngine::emit(const PlayerEvent& event) {
  for (const auto& l : listeners_) l(event);
}

LoadedScene PlayerEngine::load(const std::string& path) {
  auto reader = ContainerReader::open(path);
  pending_audio_ = reader;
  return {reader->shared_scene(), reader->frame_count()};
}

std::vector<PlayerEvent> PlayerEngine::apply(const ControlCommand& command) {
  const bool is_load = std::holds_alternative<command::Load>(command);
  auto transition = handle_command(state_, command, [this](const std::string& p) { return load(p); });
  const bool accepted =
      !transition.events.empty() && transition.events.front().type != PlayerEvent::Type::error;

  if (accepted && is_load) {
    audio_ = std::move(pending_audio_);
    renderer_ = std::make_unique<Renderer>(transition.state.scene, audio_, options_.render);
    meter_ = std::make_unique<MomentaryMeter>(transition.state.user.target_layout, audio_->sample_rate());
    rendered_since_load_ = false;
  }
  pending_audio_.reset();

  if (accepted && renderer_) {
    const bool layout_changed = renderer_->layout() != transition.state.user.target_layout;
    renderer_->set_user_state(transition.state.user, !rendered_since_load_);
    if (layout_changed || is_load)
      meter_ = std::make_unique<MomentaryMeter>(transition.state.user.target_layout, audio_->sample_rate());
  }
  state_ = std::move(transition.state);
  publish(state_);
  for (const auto& e : transition.events) emit(e);
  if (accepted && !options_.settings_path.empty()) save_settings();
  return std::move(transition.events);
}

void PlayerEngine::render_one() {
  DoubleBuffer block;
  try {
    block = renderer_->render_frame(state_.position);
    if (sink_) sink_->consume(block, renderer_->layout(), audio_->sample_rate());
  } catch (const Error& e) {
    state_.transport = Transport::stopped;
    publish(state_);
    auto event = error_event("playback", std::string(e.code_name()), e.what());
    event.state = std::make_shared<const PlayerState>(state_);
    emit(event);
    return;
  }
  rendered_since_load_ = true;
  meter_->process(block);
  ++state_.position;
  state_.meters.momentary_lkfs = meter_->momentary();
  state_.meters.clip_count = renderer_->clipped_samples();

  bool finished = false;
  if (state_.position >= state_.frame_count) {
    state_.transport = Transport::stopped;
    finished = true;
  }
  publish(state_);

  // meters are pushed at least ten times per second of audio
  const double frame_seconds =
      static_cast<double>(audio_->frame_length()) / static_cast<double>(audio_->sample_rate());
  const auto tick_frames = std::max<std::size_t>(1, static_cast<std::size_t>(0.1 / frame_seconds));
  if (++frames_since_tick_ >= tick_frames || finished) {
    frames_since_tick_ = 0;
    PlayerEvent tick;
    tick.cause = "tick";
    tick.state = snapshot();
    emit(tick);
  }
  if (finished) {
    PlayerEvent end;
    end.type = PlayerEvent::Type::eof;
    end.cause = "playback";
    end.code = "eof";
    end.message = "end of programme";
    end.state = snapshot();
    emit(end);
  }
}

bool PlayerEngine::process_frame() {
  std::deque<Pending> pending;
  {
    std::lock_guard lock(queue_mutex_);
    pending.swap(queue_);
  }
  for (const auto& p : pending) {
    auto events = apply(p.command);
    if (p.done) p.done(events);
  }
  if (state_.transport != Transport::playing || !renderer_) return false;
  render_one();
  return true;
}

void PlayerEngine::start() {
  {
    std::lock_guard lock(queue_mutex_);
    if (running_) return;
    running_ = true;
  }
  thread_ = std::thread([this] {
    using clock = std::chrono::steady_clock;
    auto deadline = clock::now();
    bool was_playing = false;
    for (;;) {
      {
        std::unique_lock lock(queue_mutex_);
        if (!running_) break;
        if (state_.transport != Transport::playing && queue_.empty())
          queue_cv_.wait_for(lock, std::chrono::milliseconds(50),
                             [this] { return !running_ || !queue_.empty(); });
        if (!running_) break;
      }
      const bool rendered = process_frame();
      if (!rendered) {
        was_playing = false;
        continue;
      }
      if (options_.realtime && audio_) {
        if (!was_playing) deadline = clock::now();
        deadline += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(
            static_cast<double>(audio_->frame_length()) / audio_->sample_rate()));
        std::this_thread::sleep_until(deadline);
      }
      was_playing = true;
    }
  });
}

void PlayerEngine::stop() {
  {
    std::lock_guard lock(queue_mutex_);
    if (!running_) return;
    running_ = false;
  }
  queue_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void PlayerEngine::load_settings() {
  if (options_.settings_path.empty()) return;
  std::ifstream in(options_.settings_path);
  if (!in) return;
  try {
    apply_preferences(json::parse(in), state_);
  } catch (const std::exception&) {
    // an unreadable settings file falls back to defaults
  }
}

void PlayerEngine::save_settings() const {
  std::ofstream out(options_.settings_path, std::ios::trunc);
  if (out) out << preferences_to_json(state_).dump(2) << "\n";
}

}  // namespace oba
