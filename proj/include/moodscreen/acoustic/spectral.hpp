#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "moodscreen/acoustic/lld.hpp"
#include "moodscreen/audio/fft.hpp"
#include "moodscreen/audio/vad.hpp"
#include "moodscreen/audio/wav.hpp"

namespace moodscreen {

inline constexpr double kIntensityFloorDb = -120.0;
inline constexpr std::size_t kFftSize = 512;
inline constexpr int kMelBands = 26;
inline constexpr int kCepstra = 4;
inline constexpr int kLpcOrder = 12;

// Levinson-Durbin. Returns a[0..order] with a[0] = 1, or nothing for a
// degenerate (zero-energy) autocorrelation.
inline std::optional<std::vector<double>> levinson(const std::vector<double>& r, int order) {
  if (r.empty() || r[0] <= 0.0) return std::nullopt;
  std::vector<double> a(order + 1, 0.0), tmp(order + 1);
  a[0] = 1.0;
  double err = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    tmp = a;
    for (int j = 1; j < i; ++j) a[j] = tmp[j] + k * tmp[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    if (err <= 0.0) return std::nullopt;
  }
  return a;
}

// Roots of 1 + a1 z^-1 + ... + ap z^-p via companion-matrix eigenvalues.
inline std::vector<std::complex<double>> lpc_roots(const std::vector<double>& a) {
  const int p = static_cast<int>(a.size()) - 1;
  if (p < 1) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) companion(0, j) = -a[j + 1];
  for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> roots;
  for (int i = 0; i < p; ++i) roots.push_back(solver.eigenvalues()[i]);
  return roots;
}

struct FormantFrame {
  std::vector<double> freq_hz;
  std::vector<double> bandwidth_hz;
};

// Formant candidates from LPC poles of a pre-emphasised, windowed frame.
inline FormantFrame formants_of(std::span<const double> frame, int fs, int order = kLpcOrder) {
  FormantFrame out;
  const std::size_t n = frame.size();
  if (n <= static_cast<std::size_t>(order)) return out;
  static thread_local std::vector<double> window;
  if (window.size() != n) window = hamming(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (frame[i] - (i ? 0.97 * frame[i - 1] : 0.0)) * window[i];
  std::vector<double> r(order + 1, 0.0);
  for (int lag = 0; lag <= order; ++lag)
    for (std::size_t i = static_cast<std::size_t>(lag); i < n; ++i) r[lag] += y[i] * y[i - lag];
  r[0] *= 1.0 + 1e-9;
  const auto a = levinson(r, order);
  if (!a) return out;
  std::vector<std::pair<double, double>> cands;
  for (const auto& z : lpc_roots(*a)) {
    if (z.imag() <= 0.0) continue;
    const double freq = std::atan2(z.imag(), z.real()) * fs / (2.0 * std::numbers::pi);
    const double bw = -std::log(std::abs(z)) * fs / std::numbers::pi;
    if (freq > 90.0 && freq < fs / 2.0 - 50.0 && bw > 0.0 && bw < 400.0) cands.emplace_back(freq, bw);
  }
  std::sort(cands.begin(), cands.end());
  for (const auto& [f, b] : cands) {
    out.freq_hz.push_back(f);
    out.bandwidth_hz.push_back(b);
  }
  return out;
}

namespace detail {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank weights over power-spectrum bins.
inline std::vector<std::vector<double>> mel_filterbank(int fs, std::size_t n_fft, int bands, double lo_hz, double hi_hz) {
  const std::size_t n_bins = n_fft / 2 + 1;
  std::vector<double> edges(bands + 2);
  const double m_lo = hz_to_mel(lo_hz), m_hi = hz_to_mel(hi_hz);
  for (int i = 0; i < bands + 2; ++i) edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (bands + 1));
  std::vector<std::vector<double>> fb(bands, std::vector<double>(n_bins, 0.0));
  for (int b = 0; b < bands; ++b)
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(n_fft);
      if (f > edges[b] && f < edges[b + 2])
        fb[b][k] = f <= edges[b + 1] ? (f - edges[b]) / (edges[b + 1] - edges[b])
                                     : (edges[b + 2] - f) / (edges[b + 2] - edges[b + 1]);
    }
  return fb;
}

// Least-squares slope of dB power against log2 frequency, bins in (lo, hi].
inline double band_slope_db_per_octave(const std::vector<double>& power, double bin_hz, double lo, double hi, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 1; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f <= lo || f > hi) continue;
    const double xv = std::log2(f);
    const double yv = 10.0 * std::log10(std::max(power[k], floor));
    sx += xv;
    sy += yv;
    sxx += xv * xv;
    sxy += xv * yv;
    ++n;
  }
  const double den = n * sxx - sx * sx;
  return n >= 2 && den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

inline double band_sum(const std::vector<double>& power, double bin_hz, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f >= lo && f < hi) acc += power[k];
  }
  return acc;
}

inline double band_max(const std::vector<double>& power, double bin_hz, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f >= lo && f < hi) acc = std::max(acc, power[k]);
  }
  return acc;
}

inline double ratio_db(double num, double den) {
  if (num <= 0.0 || den <= 0.0) return 0.0;
  return 10.0 * std::log10(num / den);
}

}  // namespace detail

// Frame-level spectral and energy descriptors on the shared 25/10 ms grid.
struct SpectralTracks {
  LldTrack intensity_db;
  LldTrack slope_0_500;
  LldTrack slope_500_1500;
  LldTrack alpha_ratio;
  LldTrack hammarberg;
  LldTrack flux;
  std::vector<LldTrack> mfcc;       // c1..c4
  std::vector<LldTrack> formant;    // F1..F3 centre frequency, masked when absent
  std::vector<LldTrack> bandwidth;  // B1..B3
  std::vector<std::vector<double>> power;  // per-frame power spectra (kept for harmonic measures)
  double bin_hz = 0.0;

  std::vector<const LldTrack*> all() const {
    std::vector<const LldTrack*> out{&intensity_db, &slope_0_500, &slope_500_1500, &alpha_ratio, &hammarberg, &flux};
    for (const auto& t : mfcc) out.push_back(&t);
    for (const auto& t : formant) out.push_back(&t);
    for (const auto& t : bandwidth) out.push_back(&t);
    return out;
  }
};

inline SpectralTracks spectral_analysis(const AudioBuffer& seg) {
  SpectralTracks s;
  const int fs = seg.sample_rate;
  const std::size_t L = ms_to_samples(kFrameMs, fs);
  const std::size_t hop = ms_to_samples(kHopMs, fs);
  const std::size_t n_fft = std::max(kFftSize, next_power_of_two(L));
  const std::size_t n_frames = frame_count(seg.samples.size(), L, hop);
  s.bin_hz = static_cast<double>(fs) / static_cast<double>(n_fft);
  auto init = [&](LldTrack& t, const char* name, bool masked) {
    t.name = name;
    t.values.assign(n_frames, 0.0);
    if (masked) t.mask.assign(n_frames, 0);
  };
  init(s.intensity_db, "intensity_db", false);
  init(s.slope_0_500, "slope_0_500", false);
  init(s.slope_500_1500, "slope_500_1500", false);
  init(s.alpha_ratio, "alpha_ratio", false);
  init(s.hammarberg, "hammarberg", false);
  init(s.flux, "spectral_flux", false);
  s.mfcc.resize(kCepstra);
  for (int c = 0; c < kCepstra; ++c) init(s.mfcc[c], ("mfcc" + std::to_string(c + 1)).c_str(), false);
  s.formant.resize(3);
  s.bandwidth.resize(3);
  for (int i = 0; i < 3; ++i) {
    init(s.formant[i], ("f" + std::to_string(i + 1)).c_str(), true);
    init(s.bandwidth[i], ("f" + std::to_string(i + 1) + "_bandwidth").c_str(), true);
  }
  if (n_frames == 0) return s;

  const auto window = hamming(L);
  static thread_local std::vector<std::vector<double>> fb;
  static thread_local int fb_rate = 0;
  if (fb_rate != fs || fb.empty()) {
    fb = detail::mel_filterbank(fs, n_fft, kMelBands, 20.0, fs / 2.0);
    fb_rate = fs;
  }
  std::vector<double> prev_mag;
  std::vector<double> frame(L);
  s.power.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* x = seg.samples.data() + f * hop;
    double ms = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      ms += x[i] * x[i];
      frame[i] = x[i] * window[i];
    }
    ms /= static_cast<double>(L);
    s.intensity_db.values[f] = ms > 1e-12 ? 10.0 * std::log10(ms) : kIntensityFloorDb;
    auto power = power_spectrum(frame, n_fft);
    const double pmax = *std::max_element(power.begin(), power.end());
    if (pmax <= 0.0) {
      prev_mag.assign(power.size(), 0.0);
      s.power[f] = std::move(power);
      continue;
    }
    const double floor = pmax * 1e-12;
    s.slope_0_500.values[f] = detail::band_slope_db_per_octave(power, s.bin_hz, 0.0, 500.0, floor);
    s.slope_500_1500.values[f] = detail::band_slope_db_per_octave(power, s.bin_hz, 500.0, 1500.0, floor);
    s.alpha_ratio.values[f] = detail::ratio_db(detail::band_sum(power, s.bin_hz, 50.0, 1000.0),
                                               detail::band_sum(power, s.bin_hz, 1000.0, 5000.0));
    s.hammarberg.values[f] = detail::ratio_db(detail::band_max(power, s.bin_hz, 0.0, 2000.0),
                                              detail::band_max(power, s.bin_hz, 2000.0, 5000.0));

    std::vector<double> mag(power.size());
    double mag_sum = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) mag_sum += (mag[k] = std::sqrt(power[k]));
    for (auto& m : mag) m /= mag_sum;
    if (!prev_mag.empty()) {
      bool prev_silent = std::all_of(prev_mag.begin(), prev_mag.end(), [](double v) { return v == 0.0; });
      if (!prev_silent) {
        double acc = 0.0;
        for (std::size_t k = 0; k < mag.size(); ++k) acc += (mag[k] - prev_mag[k]) * (mag[k] - prev_mag[k]);
        s.flux.values[f] = acc;
      }
    }
    prev_mag = std::move(mag);

    std::vector<double> logmel(kMelBands);
    for (int b = 0; b < kMelBands; ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += fb[b][k] * power[k];
      logmel[b] = std::log(std::max(e, floor));
    }
    for (int c = 1; c <= kCepstra; ++c) {
      double acc = 0.0;
      for (int b = 0; b < kMelBands; ++b)
        acc += logmel[b] * std::cos(std::numbers::pi * c * (b + 0.5) / kMelBands);
      s.mfcc[c - 1].values[f] = acc * std::sqrt(2.0 / kMelBands);
    }

    const auto fm = formants_of(std::span<const double>(x, L), fs);
    for (std::size_t i = 0; i < 3 && i < fm.freq_hz.size(); ++i) {
      s.formant[i].values[f] = fm.freq_hz[i];
      s.formant[i].mask[f] = 1;
      s.bandwidth[i].values[f] = fm.bandwidth_hz[i];
      s.bandwidth[i].mask[f] = 1;
    }
    s.power[f] = std::move(power);
  }
  return s;
}

// Spectral LLD tracks as a flat list.
inline std::vector<LldTrack> spectral_llds(const AudioBuffer& seg) {
  const auto s = spectral_analysis(seg);
  std::vector<LldTrack> out;
  for (const auto* t : s.all()) out.push_back(*t);
  return out;
}

}  // namespace moodscreen
