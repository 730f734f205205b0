#include "oba/container.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "oba/byte_io.hpp"
#include "oba/error.hpp"
#include "oba/scene_json.hpp"
#include "oba/wav.hpp"

namespace oba {

namespace {

void check_scene_fits(const AudioScene& scene, std::size_t channels, int sample_rate,
                      ErrorCode code) {
  if (scene.sample_rate != sample_rate)
    throw Error(code, "scene sample rate " + std::to_string(scene.sample_rate) +
                          " differs from audio rate " + std::to_string(sample_rate));
  for (const auto& c : scene.components)
    for (auto t : c.tracks)
      if (t >= channels)
        throw Error(code, "component " + c.component_id + " uses track " + std::to_string(t) +
                              " but the audio has " + std::to_string(channels) + " channels");
}

void require_valid(const AudioScene& scene) {
  const auto report = validate_scene(scene);
  for (const auto& issue : report.issues)
    if (issue.severity == Severity::error)
      throw Error(ErrorCode::invalid_scene, issue.code + ": " + issue.message, issue.path);
}

}  // namespace

std::vector<std::uint8_t> encode_container(const AudioScene& scene, const FloatBuffer& pcm,
                                           int sample_rate) {
  require_valid(scene);
  check_scene_fits(scene, pcm.channels(), sample_rate, ErrorCode::invalid_scene);
  if (scene.frame_length <= 0) throw Error(ErrorCode::invalid_scene, "frame length must be positive");
  const std::string json = write_scene_json(scene);
  const std::size_t frame_length = static_cast<std::size_t>(scene.frame_length);
  const std::uint64_t frames = (pcm.frames() + frame_length - 1) / frame_length;
  const std::size_t channels = pcm.channels();

  std::vector<std::uint8_t> out;
  out.reserve(ContainerHeader::kSize + json.size() + frames * frame_length * channels * 4);
  out.insert(out.end(), std::begin(ContainerHeader::kMagic), std::end(ContainerHeader::kMagic));
  le::append<std::uint32_t>(out, ContainerHeader::kVersion);
  le::append<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  le::append<std::uint32_t>(out, static_cast<std::uint32_t>(channels));
  le::append<std::uint32_t>(out, static_cast<std::uint32_t>(frame_length));
  le::append<std::uint64_t>(out, frames);
  le::append<std::uint64_t>(out, json.size());
  out.insert(out.end(), json.begin(), json.end());
  const std::size_t total = static_cast<std::size_t>(frames) * frame_length;
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t c = 0; c < channels; ++c)
      le::append<float>(out, i < pcm.frames() ? pcm.at(c, i) : 0.0f);
  return out;
}

void write_container(const std::string& path, const AudioScene& scene, const FloatBuffer& pcm,
                     int sample_rate) {
  const auto bytes = encode_container(scene, pcm, sample_rate);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path);
}

void pack(const AudioScene& scene, const std::string& wav_path, const std::string& out_path) {
  const auto wav = read_wav(wav_path);
  write_container(out_path, scene, wav.samples, wav.sample_rate);
}

std::shared_ptr<ContainerReader> ContainerReader::open(const std::string& path) {
  std::shared_ptr<ContainerReader> reader(new ContainerReader());
  reader->fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (reader->fd_ < 0) throw Error(ErrorCode::io_error, "cannot open " + path);
  struct stat st {};
  if (::fstat(reader->fd_, &st) != 0) throw Error(ErrorCode::io_error, "cannot stat " + path);
  reader->parse(static_cast<std::uint64_t>(st.st_size));
  return reader;
}

std::shared_ptr<ContainerReader> ContainerReader::from_bytes(std::vector<std::uint8_t> bytes) {
  std::shared_ptr<ContainerReader> reader(new ContainerReader());
  reader->memory_ = std::move(bytes);
  reader->parse(reader->memory_.size());
  return reader;
}

ContainerReader::~ContainerReader() {
  if (fd_ >= 0) ::close(fd_);
}

void ContainerReader::read_bytes(std::uint64_t offset, std::uint8_t* dst, std::size_t n) const {
  if (fd_ < 0) {
    if (offset > memory_.size() || n > memory_.size() - offset)
      throw Error(ErrorCode::container_corrupt, "read past the end of the container");
    std::memcpy(dst, memory_.data() + offset, n);
    return;
  }
  std::size_t done = 0;
  while (done < n) {
    const auto got = ::pread(fd_, dst + done, n - done, static_cast<off_t>(offset + done));
    if (got <= 0) throw Error(ErrorCode::container_corrupt, "container truncated while reading");
    done += static_cast<std::size_t>(got);
  }
}

void ContainerReader::parse(std::uint64_t total_size) {
  if (total_size < ContainerHeader::kSize)
    throw Error(ErrorCode::not_a_container, "file too small for an OBAS header");
  std::uint8_t raw[ContainerHeader::kSize];
  read_bytes(0, raw, sizeof raw);
  if (std::memcmp(raw, ContainerHeader::kMagic, 4) != 0)
    throw Error(ErrorCode::not_a_container, "bad magic; not an OBAS container");
  header_.version = le::load<std::uint32_t>(raw + 4);
  if (header_.version != ContainerHeader::kVersion)
    throw Error(ErrorCode::not_a_container, "unsupported container version " + std::to_string(header_.version));
  header_.sample_rate = le::load<std::uint32_t>(raw + 8);
  header_.channel_count = le::load<std::uint32_t>(raw + 12);
  header_.frame_length = le::load<std::uint32_t>(raw + 16);
  header_.frame_count = le::load<std::uint64_t>(raw + 20);
  header_.scene_json_length = le::load<std::uint64_t>(raw + 28);

  if (header_.sample_rate == 0 || header_.channel_count == 0 || header_.frame_length == 0)
    throw Error(ErrorCode::container_corrupt, "header has a zero rate, channel count or frame length");
  const std::uint64_t available = total_size - ContainerHeader::kSize;
  if (header_.scene_json_length > available)
    throw Error(ErrorCode::container_corrupt, "scene JSON length exceeds the file");
  const std::uint64_t payload_available = available - header_.scene_json_length;
  const std::uint64_t bytes_per_frame = std::uint64_t{header_.frame_length} * header_.channel_count * 4;
  if (header_.frame_count > std::numeric_limits<std::uint64_t>::max() / bytes_per_frame ||
      header_.frame_count * bytes_per_frame != payload_available)
    throw Error(ErrorCode::container_corrupt, "payload length does not match the header");

  std::string json(static_cast<std::size_t>(header_.scene_json_length), '\0');
  read_bytes(ContainerHeader::kSize, reinterpret_cast<std::uint8_t*>(json.data()), json.size());
  auto result = read_scene_json(json);
  warnings_ = std::move(result.warnings);
  if (result.scene.frame_length != static_cast<int>(header_.frame_length))
    throw Error(ErrorCode::container_corrupt, "scene frame length differs from the header");
  check_scene_fits(result.scene, header_.channel_count, static_cast<int>(header_.sample_rate),
                   ErrorCode::container_corrupt);
  require_valid(result.scene);
  scene_ = std::make_shared<const AudioScene>(std::move(result.scene));
  payload_offset_ = ContainerHeader::kSize + header_.scene_json_length;
}

FloatBuffer ContainerReader::read_frame(std::size_t index) const {
  if (index >= header_.frame_count)
    throw Error(ErrorCode::eof, "frame " + std::to_string(index) + " is past the end");
  const std::size_t channels = header_.channel_count;
  const std::size_t length = header_.frame_length;
  std::vector<std::uint8_t> bytes(length * channels * 4);
  read_bytes(payload_offset_ + static_cast<std::uint64_t>(index) * bytes.size(), bytes.data(), bytes.size());
  FloatBuffer out(channels, length);
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t c = 0; c < channels; ++c)
      out.at(c, i) = le::load<float>(bytes.data() + (i * channels + c) * 4);
  return out;
}

FloatBuffer ContainerReader::read_all() const {
  FloatBuffer all(header_.channel_count, frame_count() * frame_length());
  for (std::size_t f = 0; f < frame_count(); ++f) {
    const auto frame = read_frame(f);
    for (std::size_t c = 0; c < all.channels(); ++c) {
      auto src = frame.channel(c);
      std::copy(src.begin(), src.end(), all.channel(c).begin() + static_cast<std::ptrdiff_t>(f * frame_length()));
    }
  }
  return all;
}

Unpacked unpack(const std::string& path) {
  auto reader = ContainerReader::open(path);
  return {reader->shared_scene(), reader};
}

}  // namespace oba
