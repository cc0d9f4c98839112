#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "moodscreen/acoustic/lld.hpp"
#include "moodscreen/core/quantile.hpp"

namespace moodscreen {

// Summary statistics of one track over its valid frames.
struct TrackSummary {
  std::optional<double> mean, sd, cov, p20, p50, p80, range, rise, fall;
};

inline TrackSummary summarize(const LldTrack& track) {
  TrackSummary s;
  std::vector<double> v;
  v.reserve(track.values.size());
  for (std::size_t i = 0; i < track.values.size(); ++i)
    if (track.valid(i)) v.push_back(track.values[i]);
  if (v.empty()) return s;
  const double m = mean(v);
  const double sd = std::sqrt(variance(v));
  s.mean = m;
  s.sd = sd;
  s.cov = m != 0.0 ? sd / std::abs(m) : 0.0;
  std::sort(v.begin(), v.end());
  s.p20 = percentile_sorted(v, 20.0);
  s.p50 = percentile_sorted(v, 50.0);
  s.p80 = percentile_sorted(v, 80.0);
  s.range = *s.p80 - *s.p20;
  // Slopes between consecutive valid frames, per second; falling reported as magnitude.
  const double dt = track.frame_hop_ms / 1000.0;
  double rise = 0.0, fall = 0.0;
  std::size_t n_rise = 0, n_fall = 0;
  for (std::size_t i = 1; i < track.values.size(); ++i) {
    if (!track.valid(i) || !track.valid(i - 1)) continue;
    const double d = (track.values[i] - track.values[i - 1]) / dt;
    if (d > 0) {
      rise += d;
      ++n_rise;
    } else if (d < 0) {
      fall -= d;
      ++n_fall;
    }
  }
  s.rise = n_rise ? rise / static_cast<double>(n_rise) : 0.0;
  s.fall = n_fall ? fall / static_cast<double>(n_fall) : 0.0;
  return s;
}

// mean, coefficient of variation, percentiles 20/50/80, p80-p20 range and
// mean rising / falling slope. Empty tracks yield all-missing values.
inline NamedValues functionals(const LldTrack& track) {
  const auto s = summarize(track);
  const std::string& n = track.name;
  return {
      {n + "_mean", s.mean},
      {n + "_cov", s.cov},
      {n + "_p20", s.p20},
      {n + "_p50", s.p50},
      {n + "_p80", s.p80},
      {n + "_range_p20_p80", s.range},
      {n + "_rising_slope_mean", s.rise},
      {n + "_falling_slope_mean", s.fall},
  };
}

// Copy of a track restricted to frames where `mask` is set (and the track itself is valid).
inline LldTrack masked(const LldTrack& track, const std::vector<std::uint8_t>& mask, bool want) {
  LldTrack out = track;
  out.mask.assign(track.values.size(), 0);
  for (std::size_t i = 0; i < track.values.size(); ++i)
    out.mask[i] = track.valid(i) && i < mask.size() && (mask[i] != 0) == want;
  return out;
}

}  // namespace moodscreen
