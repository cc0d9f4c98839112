#pragma once

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "moodscreen/audio/wav.hpp"
#include "moodscreen/core/error.hpp"

namespace moodscreen {

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

inline double kaiser(double x, double half_width, double beta) {
  const double r = x / half_width;
  if (std::abs(r) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace detail

// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
class Resampler {
public:
  static constexpr int kZeroCrossings = 24;
  static constexpr double kBeta = 8.6;
  static constexpr double kRolloff = 0.94;

  Resampler(int source_rate, int target_rate) : source_(source_rate), target_(target_rate) {
    if (source_rate <= 0 || target_rate <= 0) throw ValidationError("sample rates must be positive");
    const int g = std::gcd(source_rate, target_rate);
    up_ = target_rate / g;
    down_ = source_rate / g;
    // cutoff in cycles per input sample
    cutoff_ = 0.5 * kRolloff * std::min(1.0, static_cast<double>(up_) / down_);
    half_width_ = kZeroCrossings / (2.0 * cutoff_);
    taps_ = static_cast<int>(std::ceil(half_width_));
    if (up_ <= 2048) {
      table_.resize(static_cast<std::size_t>(up_) * (2 * taps_ + 1));
      for (int phase = 0; phase < up_; ++phase) {
        const double frac = static_cast<double>(phase) / up_;
        for (int k = -taps_; k <= taps_; ++k)
          table_[static_cast<std::size_t>(phase) * (2 * taps_ + 1) + (k + taps_)] = kernel(k - frac);
      }
    }
  }

  AudioBuffer process(const AudioBuffer& in) const {
    if (up_ == down_) return in;
    const auto n_in = static_cast<long long>(in.samples.size());
    const auto n_out = static_cast<long long>(
        std::llround(static_cast<double>(n_in) * static_cast<double>(up_) / static_cast<double>(down_)));
    AudioBuffer out;
    out.sample_rate = target_;
    out.samples.resize(static_cast<std::size_t>(n_out));
    for (long long n = 0; n < n_out; ++n) {
      const long long num = n * down_;
      const long long base = num / up_;
      const int phase = static_cast<int>(num % up_);
      const double frac = static_cast<double>(phase) / up_;
      double acc = 0.0;
      for (int k = -taps_; k <= taps_; ++k) {
        const long long idx = base + k;
        if (idx < 0 || idx >= n_in) continue;
        const double w = table_.empty()
                             ? kernel(k - frac)
                             : table_[static_cast<std::size_t>(phase) * (2 * taps_ + 1) + (k + taps_)];
        acc += w * in.samples[static_cast<std::size_t>(idx)];
      }
      out.samples[static_cast<std::size_t>(n)] = acc;
    }
    return out;
  }

private:
  double kernel(double t) const {
    return 2.0 * cutoff_ * detail::sinc(2.0 * cutoff_ * t) * detail::kaiser(t, half_width_, kBeta);
  }

  int source_, target_;
  int up_ = 1, down_ = 1;
  double cutoff_ = 0.5, half_width_ = 1.0;
  int taps_ = 1;
  std::vector<double> table_;
};

// Band-limited resampling; identical rates pass through unchanged.
inline AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
  if (target_rate <= 0) throw ValidationError("target sample rate must be positive");
  if (buf.sample_rate == target_rate) return buf;
  return Resampler(buf.sample_rate, target_rate).process(buf);
}

}  // namespace moodscreen
