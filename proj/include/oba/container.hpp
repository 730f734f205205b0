#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "oba/audio_source.hpp"
#include "oba/scene.hpp"

namespace oba {

/// Fixed 36-byte little-endian header of an `.obas` file, followed by the
/// scene JSON and the PCM payload (float32, interleaved per sample,
/// frame after frame).
struct ContainerHeader {
  static constexpr char kMagic[4] = {'O', 'B', 'A', 'S'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kSize = 36;

  std::uint32_t version = kVersion;
  std::uint32_t sample_rate = 0;
  std::uint32_t channel_count = 0;
  std::uint32_t frame_length = 0;
  std::uint64_t frame_count = 0;
  std::uint64_t scene_json_length = 0;
};

/// Serialises scene + PCM. The PCM is zero padded to whole frames.
/// Throws invalid-scene when the scene fails validation or does not fit the audio.
std::vector<std::uint8_t> encode_container(const AudioScene& scene, const FloatBuffer& pcm,
                                           int sample_rate);

void write_container(const std::string& path, const AudioScene& scene, const FloatBuffer& pcm,
                     int sample_rate);

/// Packs a scene JSON document and a WAV file into `out_path`.
void pack(const AudioScene& scene, const std::string& wav_path, const std::string& out_path);

/// Read handle on a container. Frames are fetched on demand with
/// positioned reads, so distinct frames can be read concurrently.
class ContainerReader final : public AudioSource {
 public:
  /// Throws not-a-container, container-corrupt, schema-error or invalid-scene.
  static std::shared_ptr<ContainerReader> open(const std::string& path);
  static std::shared_ptr<ContainerReader> from_bytes(std::vector<std::uint8_t> bytes);

  ~ContainerReader() override;

  const ContainerHeader& header() const { return header_; }
  const AudioScene& scene() const { return *scene_; }
  std::shared_ptr<const AudioScene> shared_scene() const { return scene_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  int sample_rate() const override { return static_cast<int>(header_.sample_rate); }
  std::size_t channel_count() const override { return header_.channel_count; }
  std::size_t frame_length() const override { return header_.frame_length; }
  std::size_t frame_count() const override { return static_cast<std::size_t>(header_.frame_count); }
  FloatBuffer read_frame(std::size_t index) const override;

  /// Whole payload as one buffer (frame_count * frame_length samples).
  FloatBuffer read_all() const;

 private:
  ContainerReader() = default;
  void parse(std::uint64_t total_size);
  void read_bytes(std::uint64_t offset, std::uint8_t* dst, std::size_t n) const;

  int fd_ = -1;
  std::vector<std::uint8_t> memory_;
  ContainerHeader header_;
  std::uint64_t payload_offset_ = 0;
  std::shared_ptr<const AudioScene> scene_;
  std::vector<std::string> warnings_;
};

/// Unpacks to a scene and an audio handle.
struct Unpacked {
  std::shared_ptr<const AudioScene> scene;
  std::shared_ptr<ContainerReader> audio;
};
Unpacked unpack(const std::string& path);

}  // namespace oba
