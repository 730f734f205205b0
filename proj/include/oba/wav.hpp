#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "oba/buffer.hpp"

namespace oba {

struct WavData {
  int sample_rate = 0;
  FloatBuffer samples;
};

/// Reads 16/24/32-bit integer PCM and 32-bit float WAV (plain or
/// WAVE_FORMAT_EXTENSIBLE). Integers are scaled by 1 / 2^(bits-1).
WavData read_wav(const std::string& path);
WavData decode_wav(const std::vector<std::uint8_t>& bytes);

/// Writes 32-bit IEEE float WAV.
void write_wav(const std::string& path, const FloatBuffer& signal, int sample_rate);
std::vector<std::uint8_t> encode_wav(const FloatBuffer& signal, int sample_rate);

/// Streams 32-bit float frames to a WAV file, patching the sizes on close.
class WavWriter {
 public:
  WavWriter(const std::string& path, std::size_t channels, int sample_rate);
  ~WavWriter();
  WavWriter(const WavWriter&) = delete;
  WavWriter& operator=(const WavWriter&) = delete;

  void write(const DoubleBuffer& block);
  void close();
  std::size_t channels() const { return channels_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t channels_;
};

}  // namespace oba
