#include "oba/error.hpp"

namespace oba {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::preset_not_found: return "preset-not-found";
    case ErrorCode::too_short: return "too-short";
    case ErrorCode::layout_mismatch: return "layout-mismatch";
    case ErrorCode::unsupported_sample_rate: return "unsupported-sample-rate";
    case ErrorCode::missing_metadata: return "missing-metadata";
    case ErrorCode::malformed_automation: return "malformed-automation";
    case ErrorCode::unsupported_downmix: return "unsupported-downmix";
    case ErrorCode::eof: return "eof";
    case ErrorCode::container_corrupt: return "container-corrupt";
    case ErrorCode::not_a_container: return "not-a-container";
    case ErrorCode::unsupported_wav: return "unsupported-wav";
    case ErrorCode::malformed_wav: return "malformed-wav";
    case ErrorCode::schema_error: return "schema-error";
    case ErrorCode::missing_audio: return "missing-audio";
    case ErrorCode::invalid_scene: return "invalid-scene";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::no_scene: return "no-scene";
    case ErrorCode::invalid_argument: return "invalid-argument";
  }
  return "unknown";
}

}  // namespace oba
