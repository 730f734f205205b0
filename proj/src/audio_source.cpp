#include "oba/audio_source.hpp"

#include <algorithm>

#include "oba/error.hpp"

namespace oba {

MemoryAudioSource::MemoryAudioSource(FloatBuffer pcm, int sample_rate, std::size_t frame_length)
    : pcm_(std::move(pcm)), sample_rate_(sample_rate), frame_length_(frame_length) {
  if (frame_length_ == 0) throw Error(ErrorCode::invalid_argument, "frame length must be positive");
  frame_count_ = (pcm_.frames() + frame_length_ - 1) / frame_length_;
}

FloatBuffer MemoryAudioSource::read_frame(std::size_t index) const {
  if (index >= frame_count_)
    throw Error(ErrorCode::eof, "frame " + std::to_string(index) + " is past the end");
  FloatBuffer out(pcm_.channels(), frame_length_);
  const std::size_t first = index * frame_length_;
  const std::size_t n = std::min(frame_length_, pcm_.frames() - first);
  for (std::size_t c = 0; c < pcm_.channels(); ++c) {
    auto src = pcm_.channel(c).subspan(first, n);
    std::copy(src.begin(), src.end(), out.channel(c).begin());
  }
  return out;
}

}  // namespace oba
