#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "oba/audio_source.hpp"
#include "oba/loudness.hpp"
#include "oba/render.hpp"
#include "oba/scene.hpp"

namespace oba {

enum class Transport { stopped, playing, paused };

std::string_view transport_name(Transport t);

struct Meters {
  double momentary_lkfs = -std::numeric_limits<double>::infinity();
  std::uint64_t clip_count = 0;
};

/// Everything a control surface needs to draw itself. Value type; the
/// engine publishes immutable copies.
struct PlayerState {
  std::shared_ptr<const AudioScene> scene;  // null until a scene is loaded
  std::string source;
  Transport transport = Transport::stopped;
  std::size_t position = 0;  // next frame to render
  std::size_t frame_count = 0;
  std::string active_preset;
  UserState user;
  std::string ui_language = "en";
  Meters meters;

  bool loaded() const { return scene != nullptr; }
};

namespace command {
struct Load { std::string path; };
struct Play {};
struct Pause {};
struct Seek { std::size_t frame = 0; };
/// An empty id clears the explicit choice and returns to automatic selection.
struct SelectPreset { std::string preset_id; };
struct SetKindPreferences { std::vector<PresetKind> kinds; };
struct SetGain { std::string component_id; double gain_db = 0.0; };
struct SetPosition { std::string component_id; double azimuth = 0.0; double elevation = 0.0; };
struct SetMute { std::string component_id; bool muted = false; };
struct SetLayout { LayoutId layout = LayoutId::stereo_2_0; };
struct SetTargetLoudness { double lkfs = kDefaultTargetLoudness; };
struct SetDrc { std::optional<std::string> profile_id; };
struct SetUiLanguage { std::string language; };
}  // namespace command

using ControlCommand =
    std::variant<command::Load, command::Play, command::Pause, command::Seek, command::SelectPreset,
                 command::SetKindPreferences, command::SetGain, command::SetPosition, command::SetMute,
                 command::SetLayout, command::SetTargetLoudness, command::SetDrc, command::SetUiLanguage>;

std::string_view command_name(const ControlCommand& c);

struct PlayerEvent {
  enum class Type { state_changed, error, eof };
  Type type = Type::state_changed;
  std::string cause;        // command name or "tick"
  nlohmann::json echo;      // values as applied (post clamp)
  std::string code;         // error events
  std::string message;
  std::shared_ptr<const PlayerState> state;
};

struct LoadedScene {
  std::shared_ptr<const AudioScene> scene;
  std::size_t frame_count = 0;
};

/// Resolves a load path; throws oba::Error on failure.
using SceneLoader = std::function<LoadedScene(const std::string& path)>;

struct Transition {
  PlayerState state;
  std::vector<PlayerEvent> events;
};

/// Pure state transition. Out-of-range gains and positions are clamped and
/// the applied value is echoed; rejected commands leave the state as is
/// and produce a single error event.
Transition handle_command(const PlayerState& state, const ControlCommand& command,
                          const SceneLoader& loader);

/// Consumer of rendered audio.
class AudioSink {
 public:
  virtual ~AudioSink() = default;
  virtual void consume(const DoubleBuffer& block, LayoutId layout, int sample_rate) = 0;
};

/// Keeps every rendered block in memory.
class CaptureSink final : public AudioSink {
 public:
  void consume(const DoubleBuffer& block, LayoutId layout, int sample_rate) override;
  DoubleBuffer take();
  std::size_t frames() const;

 private:
  mutable std::mutex mutex_;
  std::vector<DoubleBuffer> blocks_;
};

/// Writes float WAV; the channel count is fixed by the first block.
class WavFileSink final : public AudioSink {
 public:
  explicit WavFileSink(std::string path);
  ~WavFileSink() override;
  void consume(const DoubleBuffer& block, LayoutId layout, int sample_rate) override;
  void close();

 private:
  std::string path_;
  std::unique_ptr<class WavWriter> writer_;
};

struct EngineOptions {
  RenderSettings render;
  /// Pace rendering to the audio clock instead of running flat out.
  bool realtime = false;
  /// Preferences are restored from and saved to this JSON file when set.
  std::string settings_path;
};

/// Playback engine. One render context owns every piece of DSP state;
/// control commands arrive through a queue and take effect at the next
/// frame boundary; readers get immutable state snapshots.
class PlayerEngine {
 public:
  explicit PlayerEngine(EngineOptions options = {});
  ~PlayerEngine();
  PlayerEngine(const PlayerEngine&) = delete;
  PlayerEngine& operator=(const PlayerEngine&) = delete;

  void set_sink(std::shared_ptr<AudioSink> sink);
  /// Listeners run on the render context and must not block.
  void subscribe(std::function<void(const PlayerEvent&)> listener);

  using Completion = std::function<void(const std::vector<PlayerEvent>& events)>;

  /// Thread-safe. `done` runs on the render context once the command has
  /// been applied and receives the events it produced.
  void submit(ControlCommand command, Completion done = {});
  std::shared_ptr<const PlayerState> snapshot() const;

  /// Applies queued commands, then renders one frame if playing. Returns
  /// true when a frame was rendered. Use either this or start(), not both.
  bool process_frame();

  void start();
  void stop();

 private:
  LoadedScene load(const std::string& path);
  std::vector<PlayerEvent> apply(const ControlCommand& command);
  void publish(const PlayerState& state);
  void emit(const PlayerEvent& event);
  void render_one();
  void load_settings();
  void save_settings() const;

  EngineOptions options_;
  PlayerState state_;
  std::shared_ptr<const AudioSource> audio_;
  std::shared_ptr<const AudioSource> pending_audio_;
  std::unique_ptr<Renderer> renderer_;
  std::unique_ptr<MomentaryMeter> meter_;
  bool rendered_since_load_ = false;
  std::size_t frames_since_tick_ = 0;
  std::shared_ptr<AudioSink> sink_;
  std::vector<std::function<void(const PlayerEvent&)>> listeners_;

  mutable std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  struct Pending {
    ControlCommand command;
    Completion done;
  };
  std::deque<Pending> queue_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const PlayerState> snapshot_;

  std::thread thread_;
  bool running_ = false;
};

}  // namespace oba
