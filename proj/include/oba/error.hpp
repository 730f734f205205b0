#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oba {

enum class ErrorCode {
  preset_not_found,
  too_short,
  layout_mismatch,
  unsupported_sample_rate,
  missing_metadata,
  malformed_automation,
  unsupported_downmix,
  eof,
  container_corrupt,
  not_a_container,
  unsupported_wav,
  malformed_wav,
  schema_error,
  missing_audio,
  invalid_scene,
  io_error,
  no_scene,
  invalid_argument,
};

/// Stable kebab-case identifier, as used in reports and protocol events.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string path = {})
      : std::runtime_error(message), code_(code), path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const { return error_code_name(code_); }

  /// JSON pointer (schema errors) or row/file locator; empty when not applicable.
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorCode code_;
  std::string path_;
};

}  // namespace oba
