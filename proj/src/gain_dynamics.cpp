#include "oba/gain_dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "oba/error.hpp"

namespace oba {

std::string check_track(const DynamicGainTrack& track) {
  if (track.breakpoints.empty()) return "track has no breakpoints";
  for (std::size_t i = 0; i < track.breakpoints.size(); ++i) {
    const auto& p = track.breakpoints[i];
    if (!std::isfinite(p.time) || !std::isfinite(p.gain))
      return "breakpoint " + std::to_string(i) + " is not finite";
    if (i > 0 && !(p.time > track.breakpoints[i - 1].time))
      return "breakpoint times must strictly increase (index " + std::to_string(i) + ")";
  }
  return {};
}

double gain_at(const DynamicGainTrack& track, double t) {
  const auto& bp = track.breakpoints;
  if (bp.empty()) return 0.0;
  if (t <= bp.front().time) return bp.front().gain;
  if (t >= bp.back().time) return bp.back().gain;
  auto hi = std::upper_bound(bp.begin(), bp.end(), t,
                             [](double v, const GainPoint& p) { return v < p.time; });
  auto lo = hi - 1;
  const double frac = (t - lo->time) / (hi->time - lo->time);
  return lo->gain + frac * (hi->gain - lo->gain);
}

AutomationCurve import_automation(std::span<const GainPoint> rows) {
  std::vector<std::pair<GainPoint, std::size_t>> indexed;
  indexed.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!std::isfinite(r.time) || !std::isfinite(r.gain) || r.time < 0.0)
      throw Error(ErrorCode::malformed_automation,
                  "automation row " + std::to_string(i) + " has a negative time or non-finite value",
                  "row " + std::to_string(i));
    indexed.emplace_back(r, i);
  }
  std::stable_sort(indexed.begin(), indexed.end(),
                   [](const auto& a, const auto& b) { return a.first.time < b.first.time; });
  AutomationCurve curve;
  curve.samples.reserve(indexed.size());
  for (const auto& [point, row] : indexed) {
    if (!curve.samples.empty() && curve.samples.back().time == point.time)
      curve.samples.back() = point;  // stable sort keeps input order, so later rows win
    else
      curve.samples.push_back(point);
  }
  return curve;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // from_chars rejects a leading '+'
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec == std::errc::result_out_of_range) {
    out = std::numeric_limits<double>::infinity();
    return ptr == s.data() + s.size();
  }
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

AutomationCurve parse_automation_csv(std::string_view text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) text.remove_prefix(3);
  std::vector<GainPoint> rows;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "time_s,gain_db")
        throw Error(ErrorCode::malformed_automation, "expected header 'time_s,gain_db'",
                    "line " + std::to_string(line_no));
      header_seen = true;
      continue;
    }
    auto comma = line.find(',');
    double t = 0.0;
    double g = 0.0;
    if (comma == std::string_view::npos || !parse_double(line.substr(0, comma), t) ||
        !parse_double(line.substr(comma + 1), g))
      throw Error(ErrorCode::malformed_automation,
                  "automation row " + std::to_string(rows.size()) + " is not 'time,gain'",
                  "row " + std::to_string(rows.size()));
    rows.push_back({t, g});
  }
  if (!header_seen) throw Error(ErrorCode::malformed_automation, "automation file is empty");
  return import_automation(rows);
}

AutomationCurve load_automation_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open automation file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_automation_csv(ss.str());
}

DynamicGainTrack simplify_automation(const AutomationCurve& curve, double epsilon_db,
                                     std::string track_id) {
  if (!(epsilon_db > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
  DynamicGainTrack track{std::move(track_id), {}};
  const auto& pts = curve.samples;
  if (pts.size() <= 2) {
    track.breakpoints = pts;
    if (pts.size() == 1) track.breakpoints.push_back({pts[0].time + 1.0, pts[0].gain});
    return track;
  }

  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, pts.size() - 1}};
  while (!stack.empty()) {
    auto [first, last] = stack.back();
    stack.pop_back();
    if (last - first < 2) continue;
    const auto& a = pts[first];
    const auto& b = pts[last];
    const double slope = (b.gain - a.gain) / (b.time - a.time);
    double worst = -1.0;
    std::size_t split = first;
    for (std::size_t i = first + 1; i < last; ++i) {
      const double deviation = std::abs(pts[i].gain - (a.gain + slope * (pts[i].time - a.time)));
      if (deviation > worst) {
        worst = deviation;
        split = i;
      }
    }
    if (worst > epsilon_db) {
      keep[split] = true;
      stack.emplace_back(split, last);
      stack.emplace_back(first, split);
    }
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) track.breakpoints.push_back(pts[i]);
  return track;
}

double DrcProfile::gain_for_level(double level_db) const {
  if (static_curve.empty()) return 0.0;
  if (level_db <= static_curve.front().input_db) return static_curve.front().gain_db;
  if (level_db >= static_curve.back().input_db) return static_curve.back().gain_db;
  auto hi = std::upper_bound(static_curve.begin(), static_curve.end(), level_db,
                             [](double v, const KneePoint& k) { return v < k.input_db; });
  auto lo = hi - 1;
  const double frac = (level_db - lo->input_db) / (hi->input_db - lo->input_db);
  return lo->gain_db + frac * (hi->gain_db - lo->gain_db);
}

double DrcProfile::max_gain_db() const {
  double best = 0.0;
  for (const auto& k : static_curve) best = std::max(best, k.gain_db);
  return best;
}

bool DrcProfile::is_identity() const {
  return std::all_of(static_curve.begin(), static_curve.end(),
                     [](const KneePoint& k) { return k.gain_db == 0.0; });
}

std::string check_drc_profile(const DrcProfile& profile) {
  if (profile.profile_id.empty()) return "profile id is empty";
  if (!(profile.attack_ms > 0.0) || !(profile.release_ms > 0.0))
    return "attack and release must be positive";
  const auto& c = profile.static_curve;
  if (c.empty()) return {};
  for (const auto& k : c)
    if (!std::isfinite(k.input_db) || !std::isfinite(k.gain_db)) return "knee point is not finite";
  if (c.front().input_db > -70.0 || c.back().input_db < 0.0)
    return "static curve must cover [-70, 0] dBFS";
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double dx = c[i].input_db - c[i - 1].input_db;
    if (!(dx > 0.0)) return "knee points must be sorted by strictly increasing input level";
    const double slope = (c[i].gain_db - c[i - 1].gain_db) / dx;
    if (slope > 1e-12 || slope < -1.0 - 1e-12)
      return "segment " + std::to_string(i) + " slope outside [-1, 0]";
  }
  return {};
}

const std::vector<DrcProfile>& builtin_drc_profiles() {
  static const std::vector<DrcProfile> profiles{
      {"none", {}, 5.0, 200.0},
      // 1.5:1 above -20 dBFS
      {"limited", {{-70.0, 0.0}, {-20.0, 0.0}, {0.0, -20.0 / 3.0}}, 5.0, 200.0},
      // lifts quiet passages and compresses 2:1 above -30 dBFS
      {"noisy-environment", {{-70.0, 12.0}, {-50.0, 12.0}, {-30.0, 0.0}, {0.0, -15.0}}, 2.0, 100.0},
  };
  return profiles;
}

const DrcProfile* find_builtin_drc_profile(std::string_view id) {
  for (const auto& p : builtin_drc_profiles())
    if (p.profile_id == id) return &p;
  return nullptr;
}

void apply_drc(DoubleBuffer& buffer, const DrcProfile& profile, DrcEnvelope& envelope,
               double sample_rate) {
  const double attack = std::exp(-1.0 / (profile.attack_ms * 1e-3 * sample_rate));
  const double release = std::exp(-1.0 / (profile.release_ms * 1e-3 * sample_rate));
  const bool identity = profile.is_identity();
  const std::size_t channels = buffer.channels();
  for (std::size_t i = 0; i < buffer.frames(); ++i) {
    double peak = 0.0;
    for (std::size_t c = 0; c < channels; ++c) peak = std::max(peak, std::abs(buffer.at(c, i)));
    const double level = peak > 1e-6 ? 20.0 * std::log10(peak) : -120.0;
    const double coeff = level > envelope.level_db ? attack : release;
    envelope.level_db = coeff * envelope.level_db + (1.0 - coeff) * level;
    if (identity) continue;
    const double gain = std::pow(10.0, profile.gain_for_level(envelope.level_db) / 20.0);
    for (std::size_t c = 0; c < channels; ++c) buffer.at(c, i) *= gain;
  }
}

}  // namespace oba
