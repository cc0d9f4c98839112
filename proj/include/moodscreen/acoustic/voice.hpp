#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <tuple>
#include <vector>

#include "moodscreen/acoustic/lld.hpp"
#include "moodscreen/acoustic/spectral.hpp"
#include "moodscreen/audio/vad.hpp"
#include "moodscreen/audio/wav.hpp"

namespace moodscreen {

struct PitchConfig {
  double f0_min_hz = 60.0;
  double f0_max_hz = 500.0;
  double voicing_threshold = 0.45;
  double silence_gate_db = -40.0;  // relative to the loudest frame
  double octave_tolerance = 0.75;   // shortest lag within this fraction of the best peak wins
};

struct PitchTrack {
  LldTrack f0;                    // Hz, masked by voicing
  std::vector<double> strength;   // normalized autocorrelation at the chosen lag
};

// Frame-wise normalized cross-correlation pitch tracker. Lags reaching past
// the end of the buffer see zeros.
inline PitchTrack f0_track(const AudioBuffer& seg, const PitchConfig& cfg = {}) {
  PitchTrack out;
  out.f0.name = "f0_hz";
  const int fs = seg.sample_rate;
  const std::size_t L = ms_to_samples(kFrameMs, fs);
  const std::size_t hop = ms_to_samples(kHopMs, fs);
  const auto& x = seg.samples;
  const std::size_t n_frames = frame_count(x.size(), L, hop);
  if (n_frames == 0) return out;

  const auto lag_min = static_cast<std::size_t>(std::floor(fs / cfg.f0_max_hz));
  const auto lag_max = static_cast<std::size_t>(std::ceil(fs / cfg.f0_min_hz));
  std::vector<double> sq_prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) sq_prefix[i + 1] = sq_prefix[i] + x[i] * x[i];
  auto energy = [&](std::size_t a, std::size_t len) {
    const std::size_t b = std::min(x.size(), a + len);
    return a >= x.size() ? 0.0 : sq_prefix[b] - sq_prefix[a];
  };

  double max_frame_energy = 0.0;
  for (std::size_t f = 0; f < n_frames; ++f) max_frame_energy = std::max(max_frame_energy, energy(f * hop, L));
  const double gate = max_frame_energy * std::pow(10.0, cfg.silence_gate_db / 10.0);

  out.f0.values.assign(n_frames, 0.0);
  out.f0.mask.assign(n_frames, 0);
  out.strength.assign(n_frames, 0.0);
  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t t = f * hop;
    const double e0 = energy(t, L);
    if (e0 <= 0.0 || e0 < gate) continue;
    const double* a = x.data() + t;
    for (std::size_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
      const std::size_t avail = t + lag < x.size() ? std::min(L, x.size() - (t + lag)) : 0;
      double acc = 0.0;
      const double* b = x.data() + t + lag;
      for (std::size_t i = 0; i < avail; ++i) acc += a[i] * b[i];
      const double el = energy(t + lag, L);
      r[lag] = el > 0.0 ? acc / std::sqrt(e0 * el) : 0.0;
    }
    double best = -1.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) best = std::max(best, r[lag]);
    if (best < cfg.voicing_threshold) {
      out.strength[f] = std::max(0.0, best);
      continue;
    }
    std::size_t chosen = 0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= cfg.octave_tolerance * best) {
        chosen = lag;
        break;
      }
    }
    if (chosen == 0) continue;
    const double ym = r[chosen - 1], y0 = r[chosen], yp = r[chosen + 1];
    const double denom = ym - 2.0 * y0 + yp;
    const double delta = denom < 0.0 ? std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5) : 0.0;
    const double peak = y0 - 0.25 * (ym - yp) * delta;
    out.f0.values[f] = fs / (static_cast<double>(chosen) + delta);
    out.f0.mask[f] = 1;
    out.strength[f] = std::min(1.0, peak);
  }
  return out;
}

struct Perturbation {
  std::optional<double> jitter_local, jitter_local_abs_s, jitter_rap, jitter_ppq5, jitter_ddp;
  std::optional<double> shimmer_local, shimmer_local_db, shimmer_apq3, shimmer_apq5, shimmer_apq11, shimmer_dda;
  std::optional<double> hnr_db;
  std::size_t periods = 0;
};

struct GlottalMark {
  double time_s;
  double amplitude;
  std::size_t run;  // index of the voiced run the mark belongs to
};

namespace detail {

inline double hnr_from_strength(double r) {
  r = std::clamp(r, 1e-6, 1.0 - 1e-6);
  return 10.0 * std::log10(r / (1.0 - r));
}

// Mean absolute deviation of each point from its centred k-point moving
// average, over points whose whole window lies inside one run.
inline std::optional<double> perturbation_quotient(const std::vector<double>& v, const std::vector<std::size_t>& run,
                                                   std::size_t k, double norm) {
  const std::size_t half = k / 2;
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = half; i + half < v.size(); ++i) {
    if (run[i - half] != run[i + half]) continue;
    double avg = 0.0;
    for (std::size_t j = i - half; j <= i + half; ++j) avg += v[j];
    avg /= static_cast<double>(k);
    acc += std::abs(v[i] - avg);
    ++n;
  }
  if (n == 0 || norm <= 0.0) return std::nullopt;
  return acc / static_cast<double>(n) / norm;
}


// Inverse-filtered (LPC) residual, coefficients refreshed every hop. Removes
// the formant ringing that overlaps consecutive cycles in the waveform.
inline std::vector<double> lpc_residual(const AudioBuffer& seg) {
  const auto& x = seg.samples;
  const int fs = seg.sample_rate;
  const std::size_t L = ms_to_samples(kFrameMs, fs);
  const std::size_t hop = ms_to_samples(kHopMs, fs);
  const int order = 2 + fs / 1000;
  std::vector<double> e(x.size(), 0.0);
  std::vector<double> frame(L), r(static_cast<std::size_t>(order) + 1);
  for (std::size_t c = 0; c < x.size(); c += hop) {
    const std::size_t start = c >= L / 2 ? c - L / 2 : 0;
    std::fill(frame.begin(), frame.end(), 0.0);
    for (std::size_t i = 0; i < L && start + i < x.size(); ++i)
      frame[i] = x[start + i] * (0.5 - 0.5 * std::cos(2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(L - 1)));
    for (int k = 0; k <= order; ++k) {
      double acc = 0.0;
      for (std::size_t i = static_cast<std::size_t>(k); i < L; ++i) acc += frame[i] * frame[i - static_cast<std::size_t>(k)];
      r[static_cast<std::size_t>(k)] = acc;
    }
    r[0] *= 1.0 + 1e-9;
    const auto a = levinson(r, order).value_or(std::vector<double>{1.0});
    const std::size_t lo = c >= hop / 2 ? c - hop / 2 : 0, hi = std::min(x.size(), c + hop - hop / 2);
    for (std::size_t n = lo; n < hi; ++n) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.size() && k <= n; ++k) acc += a[k] * x[n - k];
      e[n] = acc;
    }
  }
  return e;
}

// Band-limited value of v at fractional position t (Hann-windowed sinc).
inline double sinc_at(const std::vector<double>& v, double t) {
  constexpr int half = 8;
  const auto base = static_cast<long>(std::floor(t));
  double acc = 0.0;
  for (long i = base - half + 1; i <= base + half; ++i) {
    if (i < 0 || i >= static_cast<long>(v.size())) continue;
    const double d = t - static_cast<double>(i);
    const double s = d == 0.0 ? 1.0 : std::sin(std::numbers::pi * d) / (std::numbers::pi * d);
    acc += v[static_cast<std::size_t>(i)] * s * (0.5 + 0.5 * std::cos(std::numbers::pi * d / half));
  }
  return acc;
}

// Sub-sample maximum of v near integer index i.
inline double refine_peak(const std::vector<double>& v, std::size_t i) {
  double best_t = static_cast<double>(i), best = v[i];
  for (int k = -16; k <= 16; ++k) {
    const double t = static_cast<double>(i) + k / 16.0;
    const double y = sinc_at(v, t);
    if (y > best) {
      best = y;
      best_t = t;
    }
  }
  const double step = 1.0 / 64.0;
  const double ym = sinc_at(v, best_t - step), yp = sinc_at(v, best_t + step);
  const double denom = ym - 2.0 * best + yp;
  if (denom < 0.0) best_t += std::clamp(0.5 * step * (ym - yp) / denom, -step, step);
  return best_t;
}

}  // namespace detail

// Cycle marks: excitation peaks of the LPC residual, tracked run by run. Each
// next peak is searched within +-20% of the local pitch period and located to
// a fraction of a sample. Amplitude is the waveform maximum near the mark.
inline std::vector<GlottalMark> glottal_marks(const AudioBuffer& seg, const PitchTrack& pitch) {
  std::vector<GlottalMark> marks;
  const auto& x = seg.samples;
  const int fs = seg.sample_rate;
  const std::size_t L = ms_to_samples(kFrameMs, fs);
  const std::size_t hop = ms_to_samples(kHopMs, fs);
  const auto& f0 = pitch.f0;
  if (f0.valid_count() == 0) return marks;
  std::vector<double> e = detail::lpc_residual(seg);
  std::size_t run = 0;
  std::size_t f = 0;
  while (f < f0.values.size()) {
    if (!f0.valid(f)) {
      ++f;
      continue;
    }
    std::size_t g = f;
    while (g + 1 < f0.values.size() && f0.valid(g + 1)) ++g;
    const std::size_t begin = f * hop;
    const std::size_t end = std::min(x.size(), g * hop + L);
    auto period_at = [&](double pos) {
      auto idx = static_cast<std::size_t>(std::max(0.0, pos - static_cast<double>(L) / 2) / hop);
      idx = std::clamp(idx, f, g);
      return fs / f0.values[idx];
    };
    auto peak_in = [&](double centre, double half) {
      const auto a = static_cast<std::size_t>(std::max(static_cast<double>(begin), std::ceil(centre - half)));
      const auto b = std::min(end, static_cast<std::size_t>(std::floor(centre + half)) + 1);
      double best = 0.0;
      for (std::size_t i = a; i < b; ++i) best = std::max(best, x[i]);
      return best;
    };
    // Excitation polarity of this run: the sign of the larger residual extreme.
    double hi = 0.0, lo = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      hi = std::max(hi, e[i]);
      lo = std::min(lo, e[i]);
    }
    if (-lo > hi)
      for (std::size_t i = begin; i < end; ++i) e[i] = -e[i];

    auto argmax = [&](std::size_t a, std::size_t b) {
      std::size_t idx = a;
      for (std::size_t i = a; i < b; ++i)
        if (e[i] > e[idx]) idx = i;
      return idx;
    };
    // A pulse stands well clear of the residual level over the surrounding two periods.
    auto is_pulse = [&](std::size_t idx, double period) {
      const auto w = static_cast<std::size_t>(period);
      const std::size_t a = idx > begin + w ? idx - w : begin, b = std::min(end, idx + w + 1);
      double ss = 0.0;
      for (std::size_t i = a; i < b; ++i) ss += e[i] * e[i];
      return e[idx] > 3.0 * std::sqrt(ss / static_cast<double>(b - a));
    };
    const std::size_t seed_idx = argmax(begin, end);
    std::vector<GlottalMark> found;
    if (is_pulse(seed_idx, period_at(static_cast<double>(seed_idx)))) {
      const double seed_pos = detail::refine_peak(e, seed_idx);
      found.push_back({seed_pos, 0.0, run});
      for (int dir : {1, -1}) {
        double pos = seed_pos;
        while (true) {
          const double period = period_at(pos);
          const double lo_t = pos + dir * (dir > 0 ? 0.8 : 1.2) * period;
          const double hi_t = pos + dir * (dir > 0 ? 1.2 : 0.8) * period;
          if (lo_t < static_cast<double>(begin) || hi_t + 1 > static_cast<double>(end)) break;
          std::size_t idx = argmax(static_cast<std::size_t>(std::ceil(lo_t)), static_cast<std::size_t>(std::floor(hi_t)) + 1);
          // A pulse half way there means the pitch track is an octave low here.
          const double h_lo = pos + dir * (dir > 0 ? 0.4 : 0.6) * period, h_hi = pos + dir * (dir > 0 ? 0.6 : 0.4) * period;
          const std::size_t half_idx = argmax(static_cast<std::size_t>(std::ceil(h_lo)), static_cast<std::size_t>(std::floor(h_hi)) + 1);
          if (is_pulse(half_idx, 0.5 * period) && e[half_idx] > 0.5 * e[idx]) idx = half_idx;
          if (!is_pulse(idx, period)) break;
          pos = detail::refine_peak(e, idx);
          found.push_back({pos, 0.0, run});
        }
      }
    }
    std::sort(found.begin(), found.end(), [](const auto& p, const auto& q) { return p.time_s < q.time_s; });
    std::size_t in_run = 0;
    for (auto& m : found) {
      m.amplitude = peak_in(m.time_s, 0.25 * period_at(m.time_s));
      if (m.amplitude <= 0.0) continue;
      m.time_s /= fs;
      marks.push_back(m);
      ++in_run;
    }
    if (in_run > 0) ++run;
    f = g + 1;
  }
  return marks;
}

inline Perturbation perturbation(const AudioBuffer& seg, const PitchTrack& pitch) {
  Perturbation out;
  double hnr_acc = 0.0;
  std::size_t hnr_n = 0;
  for (std::size_t f = 0; f < pitch.f0.values.size(); ++f)
    if (pitch.f0.valid(f)) {
      hnr_acc += detail::hnr_from_strength(pitch.strength[f]);
      ++hnr_n;
    }
  if (hnr_n > 0) out.hnr_db = hnr_acc / static_cast<double>(hnr_n);

  const auto marks = glottal_marks(seg, pitch);
  std::vector<double> periods, amps_for_period;
  std::vector<std::size_t> period_run;
  std::vector<double> amps;
  std::vector<std::size_t> amp_run;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    amps.push_back(marks[i].amplitude);
    amp_run.push_back(marks[i].run);
    if (i > 0 && marks[i].run == marks[i - 1].run) {
      periods.push_back(marks[i].time_s - marks[i - 1].time_s);
      period_run.push_back(marks[i].run);
    }
  }
  out.periods = periods.size();
  if (periods.size() < 3) return out;

  double mean_t = 0.0;
  for (double t : periods) mean_t += t;
  mean_t /= static_cast<double>(periods.size());
  double diff = 0.0, ddp = 0.0;
  std::size_t n_diff = 0, n_ddp = 0;
  for (std::size_t i = 1; i < periods.size(); ++i) {
    if (period_run[i] != period_run[i - 1]) continue;
    diff += std::abs(periods[i] - periods[i - 1]);
    ++n_diff;
    if (i + 1 < periods.size() && period_run[i + 1] == period_run[i]) {
      ddp += std::abs((periods[i + 1] - periods[i]) - (periods[i] - periods[i - 1]));
      ++n_ddp;
    }
  }
  if (n_diff > 0) {
    out.jitter_local_abs_s = diff / static_cast<double>(n_diff);
    out.jitter_local = *out.jitter_local_abs_s / mean_t;
  }
  if (n_ddp > 0) out.jitter_ddp = ddp / static_cast<double>(n_ddp) / mean_t;
  out.jitter_rap = detail::perturbation_quotient(periods, period_run, 3, mean_t);
  out.jitter_ppq5 = detail::perturbation_quotient(periods, period_run, 5, mean_t);

  double mean_a = 0.0;
  bool all_positive = true;
  for (double a : amps) {
    mean_a += a;
    all_positive = all_positive && a > 0.0;
  }
  mean_a /= static_cast<double>(amps.size());
  double adiff = 0.0, adb = 0.0, dda = 0.0;
  std::size_t n_adiff = 0, n_dda = 0;
  for (std::size_t i = 1; i < amps.size(); ++i) {
    if (amp_run[i] != amp_run[i - 1]) continue;
    adiff += std::abs(amps[i] - amps[i - 1]);
    if (all_positive) adb += std::abs(20.0 * std::log10(amps[i] / amps[i - 1]));
    ++n_adiff;
    if (i + 1 < amps.size() && amp_run[i + 1] == amp_run[i]) {
      dda += std::abs((amps[i + 1] - amps[i]) - (amps[i] - amps[i - 1]));
      ++n_dda;
    }
  }
  if (n_adiff > 0 && mean_a > 0.0) {
    out.shimmer_local = adiff / static_cast<double>(n_adiff) / mean_a;
    if (all_positive) out.shimmer_local_db = adb / static_cast<double>(n_adiff);
  }
  if (n_dda > 0 && mean_a > 0.0) out.shimmer_dda = dda / static_cast<double>(n_dda) / mean_a;
  if (mean_a > 0.0) {
    out.shimmer_apq3 = detail::perturbation_quotient(amps, amp_run, 3, mean_a);
    out.shimmer_apq5 = detail::perturbation_quotient(amps, amp_run, 5, mean_a);
    out.shimmer_apq11 = detail::perturbation_quotient(amps, amp_run, 11, mean_a);
  }
  return out;
}

}  // namespace moodscreen
