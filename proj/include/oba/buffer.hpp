#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace oba {

/// Planar multichannel sample buffer: channel c occupies
/// data[c * frames, (c + 1) * frames).
template <typename T>
class Buffer {
 public:
  Buffer() = default;
  Buffer(std::size_t channels, std::size_t frames)
      : channels_(channels), frames_(frames), data_(channels * frames, T{}) {}

  std::size_t channels() const noexcept { return channels_; }
  std::size_t frames() const noexcept { return frames_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> channel(std::size_t c) {
    assert(c < channels_);
    return {data_.data() + c * frames_, frames_};
  }
  std::span<const T> channel(std::size_t c) const {
    assert(c < channels_);
    return {data_.data() + c * frames_, frames_};
  }

  T& at(std::size_t c, std::size_t i) { return data_[c * frames_ + i]; }
  const T& at(std::size_t c, std::size_t i) const { return data_[c * frames_ + i]; }

  std::vector<T>& raw() noexcept { return data_; }
  const std::vector<T>& raw() const noexcept { return data_; }

  /// Appends the frames of `other` (same channel count) after the existing ones.
  void append(const Buffer& other) {
    assert(other.channels_ == channels_ || frames_ == 0);
    if (frames_ == 0) {
      *this = other;
      return;
    }
    Buffer joined(channels_, frames_ + other.frames_);
    for (std::size_t c = 0; c < channels_; ++c) {
      auto dst = joined.channel(c);
      auto a = channel(c);
      auto b = other.channel(c);
      std::copy(a.begin(), a.end(), dst.begin());
      std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(frames_));
    }
    *this = std::move(joined);
  }

  friend bool operator==(const Buffer&, const Buffer&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::vector<T> data_;
};

using FloatBuffer = Buffer<float>;
using DoubleBuffer = Buffer<double>;

template <typename To, typename From>
Buffer<To> convert_buffer(const Buffer<From>& in) {
  Buffer<To> out(in.channels(), in.frames());
  for (std::size_t k = 0; k < in.raw().size(); ++k) out.raw()[k] = static_cast<To>(in.raw()[k]);
  return out;
}

}  // namespace oba
