#include "oba/layout.hpp"

namespace oba {

const SpeakerLayout& speaker_layout(LayoutId id) {
  static const SpeakerLayout mono{LayoutId::mono_1_0, {{"M", 0.0, 0.0, false}}};
  static const SpeakerLayout stereo{LayoutId::stereo_2_0,
                                    {{"L", 30.0, 0.0, false}, {"R", -30.0, 0.0, false}}};
  static const SpeakerLayout surround{LayoutId::surround_5_1,
                                      {{"L", 30.0, 0.0, false},
                                       {"R", -30.0, 0.0, false},
                                       {"C", 0.0, 0.0, false},
                                       {"LFE", 0.0, 0.0, true},
                                       {"Ls", 110.0, 0.0, false},
                                       {"Rs", -110.0, 0.0, false}}};
  switch (id) {
    case LayoutId::mono_1_0: return mono;
    case LayoutId::stereo_2_0: return stereo;
    case LayoutId::surround_5_1: return surround;
  }
  return stereo;
}

std::string_view layout_name(LayoutId id) {
  switch (id) {
    case LayoutId::mono_1_0: return "mono_1_0";
    case LayoutId::stereo_2_0: return "stereo_2_0";
    case LayoutId::surround_5_1: return "surround_5_1";
  }
  return "stereo_2_0";
}

std::optional<LayoutId> parse_layout(std::string_view name) {
  if (name == "mono_1_0" || name == "1.0" || name == "mono") return LayoutId::mono_1_0;
  if (name == "stereo_2_0" || name == "2.0" || name == "stereo") return LayoutId::stereo_2_0;
  if (name == "surround_5_1" || name == "5.1") return LayoutId::surround_5_1;
  return std::nullopt;
}

std::optional<LayoutId> layout_for_channel_count(std::size_t channels) {
  switch (channels) {
    case 1: return LayoutId::mono_1_0;
    case 2: return LayoutId::stereo_2_0;
    case 6: return LayoutId::surround_5_1;
    default: return std::nullopt;
  }
}

}  // namespace oba
