#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "oba/audio_source.hpp"
#include "oba/buffer.hpp"
#include "oba/gain_dynamics.hpp"
#include "oba/scene.hpp"

namespace oba::testing {

inline constexpr int kRate = 48000;

std::vector<double> sine(double frequency, double amplitude, double seconds, int rate = kRate);
std::vector<double> white_noise(std::uint32_t seed, double amplitude, std::size_t n);

/// Band-limited noise with a syllabic (about 4 Hz) envelope and pauses,
/// roughly the spectrum and rhythm of running speech.
std::vector<double> speech_like(std::uint32_t seed, double seconds, double rms, int rate = kRate);

/// Speech-like signal that is silent outside `active` intervals (seconds).
std::vector<double> speech_in(std::uint32_t seed, double seconds, double rms,
                              const std::vector<std::pair<double, double>>& active, int rate = kRate);

/// Dense workstation-style automation: 0 dB outside `active`, `depth_db`
/// inside, with linear fades of `fade_s`, sampled every `step_s`.
AutomationCurve duck_automation(double seconds, const std::vector<std::pair<double, double>>& active,
                                double depth_db, double fade_s = 0.005, double step_s = 0.001);

FloatBuffer to_float(const std::vector<std::vector<double>>& channels);
DoubleBuffer to_double(const std::vector<std::vector<double>>& channels);
std::vector<double> scaled(std::vector<double> x, double gain);

std::shared_ptr<MemoryAudioSource> memory_source(const FloatBuffer& pcm, int frame_length = 1024,
                                                 int rate = kRate);

/// Fresh empty directory under the system temp directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Bed (2 channels of decorrelated noise) plus one speech-like dialogue
/// track; channel 2 is the dialogue.
struct DialogFixture {
  FloatBuffer pcm;
  std::vector<std::pair<double, double>> speech;
};
DialogFixture dialog_fixture(double seconds, std::uint32_t seed = 7);

/// Film mix (2 channels) plus a description voice on channel 2 that is
/// active during `speech`, with the matching -12 dB duck automation.
struct AdFixture {
  FloatBuffer pcm;
  std::vector<std::pair<double, double>> speech;
  AutomationCurve automation;
};
AdFixture ad_fixture(double seconds, std::uint32_t seed = 11);

}  // namespace oba::testing
