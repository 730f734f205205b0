#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oba {

enum class LayoutId { mono_1_0, stereo_2_0, surround_5_1 };

struct Speaker {
  std::string name;
  double azimuth;    // degrees, positive = left
  double elevation;  // degrees
  bool is_lfe;
};

/// Canonical loudspeaker setup. Channel order follows the WAV convention
/// (L R C LFE Ls Rs for 5.1).
struct SpeakerLayout {
  LayoutId id;
  std::vector<Speaker> speakers;

  std::size_t channel_count() const noexcept { return speakers.size(); }
};

const SpeakerLayout& speaker_layout(LayoutId id);

std::string_view layout_name(LayoutId id);

/// Accepts the canonical names and the short forms "1.0", "2.0", "5.1".
std::optional<LayoutId> parse_layout(std::string_view name);

/// Layout implied by a bed or file channel count (1, 2 or 6).
std::optional<LayoutId> layout_for_channel_count(std::size_t channels);

inline constexpr LayoutId kAllLayouts[] = {LayoutId::mono_1_0, LayoutId::stereo_2_0,
                                           LayoutId::surround_5_1};

}  // namespace oba
