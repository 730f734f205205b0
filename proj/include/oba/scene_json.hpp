#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "oba/scene.hpp"

namespace oba {

/// Canonical JSON text: fixed field order, dB and LKFS values rounded to
/// two decimals (dynamic gain breakpoints keep full precision).
std::string write_scene_json(const AudioScene& scene);

struct SceneReadResult {
  AudioScene scene;
  /// One entry per ignored unknown field, as a JSON pointer.
  std::vector<std::string> warnings;
};

/// Throws schema-error with the JSON pointer of the offending value.
SceneReadResult read_scene_json(std::string_view text);

AudioScene load_scene_file(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_scene_file(const std::string& path, const AudioScene& scene);

/// Rounds to the two-decimal precision used for dB/LKFS fields.
double round_centi(double value);

}  // namespace oba
