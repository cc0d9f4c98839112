#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "moodscreen/acoustic/feature_vector.hpp"
#include "moodscreen/acoustic/functionals.hpp"
#include "moodscreen/acoustic/spectral.hpp"
#include "moodscreen/acoustic/voice.hpp"

namespace moodscreen {

inline constexpr std::size_t kPraatSize = 39;
inline constexpr std::size_t kEgemapsSize = 88;

// Everything the two acoustic inventories need, computed once per segment.
struct AcousticAnalysis {
  double duration_s = 0.0;
  PitchTrack pitch;
  LldTrack f0_semitone;
  LldTrack hnr;
  Perturbation voice;
  SpectralTracks spectral;
  LldTrack h1_h2, h1_a3;
};

inline AcousticAnalysis analyze_segment(const AudioBuffer& seg) {
  AcousticAnalysis a;
  a.duration_s = seg.duration_s();
  a.pitch = f0_track(seg);
  a.voice = perturbation(seg, a.pitch);
  a.spectral = spectral_analysis(seg);

  const auto& f0 = a.pitch.f0;
  a.f0_semitone = f0;
  a.f0_semitone.name = "f0_semitone";
  for (std::size_t i = 0; i < f0.values.size(); ++i)
    a.f0_semitone.values[i] = f0.valid(i) ? 12.0 * std::log2(f0.values[i] / 27.5) : 0.0;
  a.hnr = f0;
  a.hnr.name = "hnr_db";
  for (std::size_t i = 0; i < f0.values.size(); ++i)
    a.hnr.values[i] = f0.valid(i) ? detail::hnr_from_strength(a.pitch.strength[i]) : 0.0;

  a.h1_h2 = f0;
  a.h1_h2.name = "h1_h2_db";
  a.h1_a3 = f0;
  a.h1_a3.name = "h1_a3_db";
  const auto& sp = a.spectral;
  auto harmonic_power = [&](const std::vector<double>& p, double hz) {
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor(hz * 0.9 / sp.bin_hz)));
    const auto hi = std::min(p.size() - 1, static_cast<std::size_t>(std::ceil(hz * 1.1 / sp.bin_hz)));
    double best = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) best = std::max(best, p[k]);
    return best;
  };
  for (std::size_t i = 0; i < f0.values.size() && i < sp.power.size(); ++i) {
    if (!f0.valid(i)) continue;
    const auto& p = sp.power[i];
    const double h1 = harmonic_power(p, f0.values[i]);
    const double h2 = harmonic_power(p, 2.0 * f0.values[i]);
    const bool ok12 = h1 > 0.0 && h2 > 0.0 && 2.0 * f0.values[i] < sp.bin_hz * static_cast<double>(p.size() - 1);
    a.h1_h2.values[i] = ok12 ? detail::ratio_db(h1, h2) : 0.0;
    a.h1_h2.mask[i] = ok12;
    bool ok13 = false;
    if (sp.formant[2].valid(i)) {
      const double k = std::max(1.0, std::round(sp.formant[2].values[i] / f0.values[i]));
      const double a3 = harmonic_power(p, k * f0.values[i]);
      ok13 = h1 > 0.0 && a3 > 0.0;
      a.h1_a3.values[i] = ok13 ? detail::ratio_db(h1, a3) : 0.0;
    }
    a.h1_a3.mask[i] = ok13;
  }
  return a;
}

namespace detail {

struct Runs {
  std::vector<double> voiced_s, unvoiced_s;
};

inline Runs voicing_runs(const LldTrack& f0) {
  Runs r;
  const double hop_s = f0.frame_hop_ms / 1000.0;
  std::size_t i = 0;
  while (i < f0.values.size()) {
    const bool v = f0.valid(i);
    std::size_t j = i;
    while (j < f0.values.size() && f0.valid(j) == v) ++j;
    (v ? r.voiced_s : r.unvoiced_s).push_back(static_cast<double>(j - i) * hop_s);
    i = j;
  }
  return r;
}

// Intensity peaks (3-frame smoothed) above the median that are separated by
// a dip of at least 2 dB and fall on voiced frames.
inline std::size_t pseudo_syllables(const LldTrack& intensity, const LldTrack& f0) {
  const auto& v = intensity.values;
  if (v.size() < 3) return 0;
  std::vector<double> sm(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t a = i ? i - 1 : i, b = std::min(v.size() - 1, i + 1);
    sm[i] = (v[a] + v[i] + v[b]) / 3.0;
  }
  const double thr = median(sm);
  std::size_t count = 0;
  double dip = std::numeric_limits<double>::infinity();
  double last_peak = -std::numeric_limits<double>::infinity();
  bool have_peak = false;
  for (std::size_t i = 1; i + 1 < sm.size(); ++i) {
    dip = std::min(dip, sm[i]);
    const bool is_peak = sm[i] > sm[i - 1] && sm[i] >= sm[i + 1] && sm[i] > thr && f0.valid(i);
    if (!is_peak) continue;
    if (!have_peak || (last_peak - dip >= 2.0 && sm[i] - dip >= 2.0)) {
      ++count;
      have_peak = true;
      last_peak = sm[i];
      dip = sm[i];
    } else if (sm[i] > last_peak) {
      last_peak = sm[i];
      dip = sm[i];
    }
  }
  return count;
}

inline std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return mean(v);
}

inline std::optional<double> sd_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::sqrt(variance(v));
}

inline std::vector<double> valid_values(const LldTrack& t) {
  std::vector<double> out;
  for (std::size_t i = 0; i < t.values.size(); ++i)
    if (t.valid(i)) out.push_back(t.values[i]);
  return out;
}

inline std::optional<double> regression_slope(const LldTrack& t) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (!t.valid(i)) continue;
    const double x = static_cast<double>(i) * t.frame_hop_ms / 1000.0;
    sx += x;
    sy += t.values[i];
    sxx += x * x;
    sxy += x * t.values[i];
    ++n;
  }
  const double den = static_cast<double>(n) * sxx - sx * sx;
  if (n < 2 || den <= 0.0) return std::nullopt;
  return (static_cast<double>(n) * sxy - sx * sy) / den;
}

inline std::optional<double> ltas_slope(const SpectralTracks& s) {
  if (s.power.empty()) return std::nullopt;
  std::vector<double> avg(s.power.front().size(), 0.0);
  std::size_t n = 0;
  for (const auto& p : s.power) {
    if (p.empty()) continue;
    for (std::size_t k = 0; k < p.size(); ++k) avg[k] += p[k];
    ++n;
  }
  const double pmax = *std::max_element(avg.begin(), avg.end());
  if (n == 0 || pmax <= 0.0) return std::nullopt;
  return band_slope_db_per_octave(avg, s.bin_hz, 100.0, 4000.0, pmax * 1e-12);
}

}  // namespace detail

// Praat-style voice report: 39 named measures.
inline FeatureVector praat_from(const AcousticAnalysis& a) {
  FeatureVector v;
  v.set = FeatureSet::praat;
  const auto f0 = detail::valid_values(a.pitch.f0);
  const auto& sp = a.spectral;
  const auto runs = detail::voicing_runs(a.pitch.f0);
  const double voiced_s = [&] {
    double s = 0;
    for (double r : runs.voiced_s) s += r;
    return s;
  }();
  const std::size_t syll = detail::pseudo_syllables(sp.intensity_db, a.pitch.f0);
  const std::size_t n_frames = a.pitch.f0.values.size();

  v.push("duration_s", a.duration_s);
  v.push("f0_mean_hz", detail::mean_of(f0));
  v.push("f0_stdev_hz", detail::sd_of(f0));
  v.push("f0_min_hz", f0.empty() ? std::nullopt : std::optional(*std::min_element(f0.begin(), f0.end())));
  v.push("f0_max_hz", f0.empty() ? std::nullopt : std::optional(*std::max_element(f0.begin(), f0.end())));
  v.push("hnr_db", a.voice.hnr_db);
  v.push("jitter_local", a.voice.jitter_local);
  v.push("jitter_local_abs_s", a.voice.jitter_local_abs_s);
  v.push("jitter_rap", a.voice.jitter_rap);
  v.push("jitter_ppq5", a.voice.jitter_ppq5);
  v.push("jitter_ddp", a.voice.jitter_ddp);
  v.push("shimmer_local", a.voice.shimmer_local);
  v.push("shimmer_local_db", a.voice.shimmer_local_db);
  v.push("shimmer_apq3", a.voice.shimmer_apq3);
  v.push("shimmer_apq5", a.voice.shimmer_apq5);
  v.push("shimmer_apq11", a.voice.shimmer_apq11);
  v.push("shimmer_dda", a.voice.shimmer_dda);
  std::optional<double> fmean[3], fmed[3];
  for (int i = 0; i < 3; ++i) {
    const auto vals = detail::valid_values(sp.formant[i]);
    fmean[i] = detail::mean_of(vals);
    if (!vals.empty()) fmed[i] = median(vals);
  }
  for (int i = 0; i < 3; ++i) v.push("f" + std::to_string(i + 1) + "_mean_hz", fmean[i]);
  for (int i = 0; i < 3; ++i) v.push("f" + std::to_string(i + 1) + "_median_hz", fmed[i]);
  const bool all_f = fmean[0] && fmean[1] && fmean[2];
  v.push("formant_dispersion_hz", all_f ? std::optional((*fmean[2] - *fmean[0]) / 2.0) : std::nullopt);
  v.push("formant_average_hz", all_f ? std::optional((*fmean[0] + *fmean[1] + *fmean[2]) / 3.0) : std::nullopt);
  v.push("formant_geometric_mean_hz",
         all_f ? std::optional(std::cbrt(*fmean[0] * *fmean[1] * *fmean[2])) : std::nullopt);
  const auto inten = detail::valid_values(sp.intensity_db);
  v.push("intensity_mean_db", detail::mean_of(inten));
  v.push("intensity_stdev_db", detail::sd_of(inten));
  v.push("intensity_max_db",
         inten.empty() ? std::nullopt : std::optional(*std::max_element(inten.begin(), inten.end())));
  v.push("voiced_fraction", n_frames ? std::optional(static_cast<double>(a.pitch.f0.valid_count()) / n_frames)
                                     : std::nullopt);
  v.push("voiced_runs", static_cast<double>(runs.voiced_s.size()));
  v.push("voiced_run_mean_s", detail::mean_of(runs.voiced_s));
  v.push("pause_mean_s", detail::mean_of(runs.unvoiced_s));
  v.push("speech_rate_syl_per_s",
         a.duration_s > 0 ? std::optional(static_cast<double>(syll) / a.duration_s) : std::nullopt);
  v.push("articulation_rate_syl_per_s",
         voiced_s > 0 ? std::optional(static_cast<double>(syll) / voiced_s) : std::nullopt);
  v.push("f0_slope_st_per_s", detail::regression_slope(a.f0_semitone));
  v.push("ltas_slope_db_per_octave", detail::ltas_slope(sp));
  v.push("alpha_ratio_db", summarize(sp.alpha_ratio).mean);
  v.push("hammarberg_index_db", summarize(sp.hammarberg).mean);
  return v;
}

// eGeMAPS-style functionals: 88 named values.
inline FeatureVector egemaps_from(const AcousticAnalysis& a) {
  FeatureVector v;
  v.set = FeatureSet::egemaps;
  const auto& sp = a.spectral;
  const auto& voicing = a.pitch.f0.mask;

  const auto f0s = summarize(a.f0_semitone);
  v.push("f0_semitone_mean", f0s.mean);
  v.push("f0_semitone_cov", f0s.cov);
  v.push("f0_semitone_p20", f0s.p20);
  v.push("f0_semitone_p50", f0s.p50);
  v.push("f0_semitone_p80", f0s.p80);
  v.push("f0_semitone_range_p20_p80", f0s.range);
  v.push("f0_semitone_rising_slope_mean", f0s.rise);
  v.push("f0_semitone_falling_slope_mean", f0s.fall);

  const auto in = summarize(sp.intensity_db);
  v.push("intensity_db_mean", in.mean);
  v.push("intensity_db_sd", in.sd);
  v.push("intensity_db_p20", in.p20);
  v.push("intensity_db_p50", in.p50);
  v.push("intensity_db_p80", in.p80);
  v.push("intensity_db_range_p20_p80", in.range);
  v.push("intensity_db_rising_slope_mean", in.rise);
  v.push("intensity_db_falling_slope_mean", in.fall);

  v.push("jitter_local", a.voice.jitter_local);
  v.push("jitter_rap", a.voice.jitter_rap);
  v.push("jitter_ppq5", a.voice.jitter_ppq5);
  v.push("jitter_ddp", a.voice.jitter_ddp);
  v.push("shimmer_local", a.voice.shimmer_local);
  v.push("shimmer_local_db", a.voice.shimmer_local_db);
  v.push("shimmer_apq3", a.voice.shimmer_apq3);
  v.push("shimmer_apq5", a.voice.shimmer_apq5);

  const auto hnr = summarize(a.hnr);
  v.push("hnr_db_mean", hnr.mean);
  v.push("hnr_db_sd", hnr.sd);

  for (int i = 0; i < 3; ++i) {
    const auto s = summarize(sp.formant[i]);
    const std::string n = "f" + std::to_string(i + 1);
    v.push(n + "_mean", s.mean);
    v.push(n + "_cov", s.cov);
    v.push(n + "_p50", s.p50);
  }
  for (int i = 0; i < 3; ++i) {
    const auto s = summarize(sp.bandwidth[i]);
    const std::string n = "f" + std::to_string(i + 1) + "_bandwidth";
    v.push(n + "_mean", s.mean);
    v.push(n + "_cov", s.cov);
  }
  for (const LldTrack* t : {&a.h1_h2, &a.h1_a3}) {
    const auto s = summarize(*t);
    v.push(t->name + "_mean", s.mean);
    v.push(t->name + "_sd", s.sd);
  }

  for (const LldTrack* t : {&sp.alpha_ratio, &sp.hammarberg, &sp.slope_0_500, &sp.slope_500_1500}) {
    const auto s = summarize(masked(*t, voicing, true));
    v.push(t->name + "_voiced_mean", s.mean);
    v.push(t->name + "_voiced_sd", s.sd);
  }
  {
    const auto s = summarize(masked(sp.flux, voicing, true));
    v.push("spectral_flux_voiced_mean", s.mean);
    v.push("spectral_flux_voiced_cov", s.cov);
  }
  for (const auto& t : sp.mfcc) {
    const auto s = summarize(masked(t, voicing, true));
    v.push(t.name + "_voiced_mean", s.mean);
    v.push(t.name + "_voiced_sd", s.sd);
  }
  for (const LldTrack* t : {&sp.alpha_ratio, &sp.hammarberg, &sp.slope_0_500, &sp.slope_500_1500, &sp.flux}) {
    v.push(t->name + "_unvoiced_mean", summarize(masked(*t, voicing, false)).mean);
  }
  for (const auto& t : sp.mfcc) {
    const auto s = summarize(t);
    v.push(t.name + "_mean", s.mean);
    v.push(t.name + "_sd", s.sd);
  }

  const auto runs = detail::voicing_runs(a.pitch.f0);
  const std::size_t syll = detail::pseudo_syllables(sp.intensity_db, a.pitch.f0);
  const std::size_t n_frames = a.pitch.f0.values.size();
  const bool has_time = a.duration_s > 0.0;
  v.push("pseudo_syllable_rate", has_time ? std::optional(static_cast<double>(syll) / a.duration_s) : std::nullopt);
  v.push("voiced_segments_per_s",
         has_time ? std::optional(static_cast<double>(runs.voiced_s.size()) / a.duration_s) : std::nullopt);
  v.push("voiced_segment_length_mean", detail::mean_of(runs.voiced_s));
  v.push("voiced_segment_length_sd", detail::sd_of(runs.voiced_s));
  v.push("unvoiced_segment_length_mean", detail::mean_of(runs.unvoiced_s));
  v.push("unvoiced_segment_length_sd", detail::sd_of(runs.unvoiced_s));
  v.push("voiced_ratio", n_frames ? std::optional(static_cast<double>(a.pitch.f0.valid_count()) / n_frames)
                                  : std::nullopt);
  v.push("duration_s", a.duration_s);

  std::optional<double> leq;
  if (!sp.intensity_db.values.empty()) {
    double acc = 0.0;
    for (double d : sp.intensity_db.values) acc += std::pow(10.0, d / 10.0);
    leq = 10.0 * std::log10(acc / static_cast<double>(sp.intensity_db.values.size()));
  }
  v.push("equivalent_sound_level_db", leq);
  v.push("f0_semitone_slope_per_s", detail::regression_slope(a.f0_semitone));
  v.push("hnr_db_p50", hnr.p50);
  v.push("shimmer_apq11", a.voice.shimmer_apq11);
  return v;
}

inline FeatureVector praat_vector(const AudioBuffer& seg) { return praat_from(analyze_segment(seg)); }
inline FeatureVector egemaps_vector(const AudioBuffer& seg) { return egemaps_from(analyze_segment(seg)); }

// Names whose values move by exactly 20*log10(c) dB when the waveform is scaled by c.
inline bool is_level_feature(const std::string& name) {
  static const std::set<std::string> level{"intensity_mean_db", "intensity_max_db", "intensity_db_mean",
                                           "intensity_db_p20",  "intensity_db_p50", "intensity_db_p80",
                                           "equivalent_sound_level_db"};
  return level.count(name) > 0;
}

}  // namespace moodscreen
