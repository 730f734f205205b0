#pragma once

#include <cstddef>

#include "oba/buffer.hpp"

namespace oba {

/// Frame-addressable multichannel PCM. Implementations must allow
/// concurrent read_frame calls.
class AudioSource {
 public:
  virtual ~AudioSource() = default;

  virtual int sample_rate() const = 0;
  virtual std::size_t channel_count() const = 0;
  virtual std::size_t frame_length() const = 0;
  virtual std::size_t frame_count() const = 0;

  /// One frame of `frame_length()` samples per channel. Throws eof when
  /// `index >= frame_count()`.
  virtual FloatBuffer read_frame(std::size_t index) const = 0;
};

/// In-memory source; the last frame is zero padded.
class MemoryAudioSource final : public AudioSource {
 public:
  MemoryAudioSource(FloatBuffer pcm, int sample_rate, std::size_t frame_length);

  int sample_rate() const override { return sample_rate_; }
  std::size_t channel_count() const override { return pcm_.channels(); }
  std::size_t frame_length() const override { return frame_length_; }
  std::size_t frame_count() const override { return frame_count_; }
  FloatBuffer read_frame(std::size_t index) const override;

  const FloatBuffer& pcm() const { return pcm_; }

 private:
  FloatBuffer pcm_;
  int sample_rate_;
  std::size_t frame_length_;
  std::size_t frame_count_;
};

}  // namespace oba
