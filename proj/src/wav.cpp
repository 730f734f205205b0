#include "oba/wav.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include "oba/byte_io.hpp"
#include "oba/error.hpp"

namespace oba {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

bool tag_is(const std::uint8_t* p, const char* tag) { return std::memcmp(p, tag, 4) == 0; }

std::vector<std::uint8_t> wav_header(std::size_t channels, int sample_rate, std::uint64_t frames) {
  const std::uint64_t data_bytes = frames * channels * 4;
  std::vector<std::uint8_t> h;
  h.reserve(58);
  h.insert(h.end(), {'R', 'I', 'F', 'F'});
  le::append<std::uint32_t>(h, static_cast<std::uint32_t>(std::min<std::uint64_t>(
                                   50 + data_bytes, std::numeric_limits<std::uint32_t>::max())));
  h.insert(h.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  le::append<std::uint32_t>(h, 18);
  le::append<std::uint16_t>(h, kFormatFloat);
  le::append<std::uint16_t>(h, static_cast<std::uint16_t>(channels));
  le::append<std::uint32_t>(h, static_cast<std::uint32_t>(sample_rate));
  le::append<std::uint32_t>(h, static_cast<std::uint32_t>(sample_rate * channels * 4));
  le::append<std::uint16_t>(h, static_cast<std::uint16_t>(channels * 4));
  le::append<std::uint16_t>(h, 32);
  le::append<std::uint16_t>(h, 0);
  h.insert(h.end(), {'f', 'a', 'c', 't'});
  le::append<std::uint32_t>(h, 4);
  le::append<std::uint32_t>(h, static_cast<std::uint32_t>(frames));
  h.insert(h.end(), {'d', 'a', 't', 'a'});
  le::append<std::uint32_t>(h, static_cast<std::uint32_t>(
                                   std::min<std::uint64_t>(data_bytes, std::numeric_limits<std::uint32_t>::max())));
  return h;
}

}  // namespace

WavData decode_wav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || !tag_is(bytes.data(), "RIFF") || !tag_is(bytes.data() + 8, "WAVE"))
    throw Error(ErrorCode::malformed_wav, "not a RIFF/WAVE file");

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le::load<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (tag_is(chunk, "fmt ")) {
      if (size < 16 || size > available) throw Error(ErrorCode::malformed_wav, "fmt chunk truncated");
      format = le::load<std::uint16_t>(chunk + 8);
      channels = le::load<std::uint16_t>(chunk + 10);
      rate = le::load<std::uint32_t>(chunk + 12);
      bits = le::load<std::uint16_t>(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw Error(ErrorCode::malformed_wav, "extensible fmt chunk truncated");
        format = le::load<std::uint16_t>(chunk + 8 + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (tag_is(chunk, "data")) {
      data = body <= bytes.size() ? bytes.data() + body : nullptr;
      // Streaming writers may leave the size unpatched; take what is there.
      data_size = std::min<std::size_t>(size, available);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || data == nullptr) throw Error(ErrorCode::malformed_wav, "missing fmt or data chunk");
  if (!(format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) &&
      !(format == kFormatFloat && bits == 32))
    throw Error(ErrorCode::unsupported_wav, "unsupported WAV codec (format " +
                                                std::to_string(format) + ", " +
                                                std::to_string(bits) + " bits)");
  if (channels == 0 || rate == 0) throw Error(ErrorCode::malformed_wav, "zero channels or sample rate");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.samples = FloatBuffer(channels, frames);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + (i * channels + c) * width;
      float v = 0.0f;
      if (format == kFormatFloat) {
        v = le::load<float>(p);
      } else if (bits == 16) {
        v = static_cast<float>(le::load<std::int16_t>(p) / 32768.0);
      } else if (bits == 24) {
        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s -= 0x1000000;
        v = static_cast<float>(s / 8388608.0);
      } else {
        v = static_cast<float>(le::load<std::int32_t>(p) / 2147483648.0);
      }
      out.samples.at(c, i) = v;
    }
  }
  return out;
}

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const FloatBuffer& signal, int sample_rate) {
  auto bytes = wav_header(signal.channels(), sample_rate, signal.frames());
  bytes.reserve(bytes.size() + signal.raw().size() * 4);
  for (std::size_t i = 0; i < signal.frames(); ++i)
    for (std::size_t c = 0; c < signal.channels(); ++c) le::append<float>(bytes, signal.at(c, i));
  return bytes;
}

void write_wav(const std::string& path, const FloatBuffer& signal, int sample_rate) {
  const auto bytes = encode_wav(signal, sample_rate);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path);
}

struct WavWriter::Impl {
  std::ofstream out;
  int sample_rate = 0;
  std::uint64_t frames = 0;
  bool open = true;
};

WavWriter::WavWriter(const std::string& path, std::size_t channels, int sample_rate)
    : impl_(std::make_unique<Impl>()), channels_(channels) {
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  impl_->sample_rate = sample_rate;
  if (!impl_->out) throw Error(ErrorCode::io_error, "cannot create " + path);
  const auto header = wav_header(channels_, sample_rate, 0);
  impl_->out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
}

WavWriter::~WavWriter() {
  try {
    close();
  } catch (...) {
  }
}

void WavWriter::write(const DoubleBuffer& block) {
  if (!impl_->open) throw Error(ErrorCode::io_error, "WAV writer is closed");
  if (block.channels() != channels_)
    throw Error(ErrorCode::layout_mismatch, "block channel count differs from the WAV file");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(block.raw().size() * 4);
  for (std::size_t i = 0; i < block.frames(); ++i)
    for (std::size_t c = 0; c < channels_; ++c)
      le::append<float>(bytes, static_cast<float>(block.at(c, i)));
  impl_->out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  impl_->frames += block.frames();
}

void WavWriter::close() {
  if (!impl_ || !impl_->open) return;
  impl_->open = false;
  const auto header = wav_header(channels_, impl_->sample_rate, impl_->frames);
  impl_->out.seekp(0);
  impl_->out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  impl_->out.close();
}

}  // namespace oba
