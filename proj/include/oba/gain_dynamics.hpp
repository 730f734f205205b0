#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oba/buffer.hpp"

namespace oba {

struct GainPoint {
  double time;  // seconds
  double gain;  // dB

  friend bool operator==(const GainPoint&, const GainPoint&) = default;
};

/// Breakpoint gain curve applied to a preset member at playback (ducking).
/// Times strictly increase; values outside the covered span hold the
/// first/last gain.
struct DynamicGainTrack {
  std::string track_id;
  std::vector<GainPoint> breakpoints;

  friend bool operator==(const DynamicGainTrack&, const DynamicGainTrack&) = default;
};

/// Dense gain automation as exported by a workstation.
struct AutomationCurve {
  std::vector<GainPoint> samples;
};

/// Empty string when the track is well formed, otherwise a description.
std::string check_track(const DynamicGainTrack& track);

/// Gain in dB at time `t`, interpolated linearly in dB.
double gain_at(const DynamicGainTrack& track, double t);

/// Sorts rows by time and collapses duplicate times (last row wins).
/// Throws malformed-automation naming the offending row.
AutomationCurve import_automation(std::span<const GainPoint> rows);

/// Reads the `time_s,gain_db` CSV export format (LF or CRLF line endings).
AutomationCurve parse_automation_csv(std::string_view text);
AutomationCurve load_automation_csv(const std::string& path);

inline constexpr double kDefaultSimplifyEpsilonDb = 0.1;

/// Reduces a dense curve to the breakpoints needed to stay within
/// `epsilon_db` of every input sample (Ramer-Douglas-Peucker over
/// (time, dB), vertical deviation). Endpoints are always kept.
DynamicGainTrack simplify_automation(const AutomationCurve& curve, double epsilon_db,
                                     std::string track_id = "automation");

struct KneePoint {
  double input_db;
  double gain_db;

  friend bool operator==(const KneePoint&, const KneePoint&) = default;
};

struct DrcProfile {
  std::string profile_id;
  std::vector<KneePoint> static_curve;  // sorted by input level; empty = unity
  double attack_ms = 5.0;
  double release_ms = 200.0;

  /// Static gain (dB) for a detector level, piecewise linear between knees
  /// and held constant outside them.
  double gain_for_level(double level_db) const;
  double max_gain_db() const;
  bool is_identity() const;

  friend bool operator==(const DrcProfile&, const DrcProfile&) = default;
};

/// Empty string when valid. Knees must cover [-70, 0] dBFS with segment
/// slopes in [-1, 0] so the curve only ever compresses.
std::string check_drc_profile(const DrcProfile& profile);

/// Built-in profiles: "none", "limited", "noisy-environment".
const std::vector<DrcProfile>& builtin_drc_profiles();
const DrcProfile* find_builtin_drc_profile(std::string_view id);

struct DrcEnvelope {
  double level_db = -120.0;
};

/// Compresses `buffer` in place. The detector follows the peak across all
/// channels so every channel receives the same gain.
void apply_drc(DoubleBuffer& buffer, const DrcProfile& profile, DrcEnvelope& envelope,
               double sample_rate);

}  // namespace oba
