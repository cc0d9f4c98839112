#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "moodscreen/audio/wav.hpp"
#include "moodscreen/core/error.hpp"
#include "moodscreen/core/text_io.hpp"

namespace moodscreen {

struct VadConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double energy_threshold_db = -30.0;  // relative to the buffer RMS level
  double min_speech_ms = 250.0;
  double min_gap_ms = 300.0;

  void validate() const {
    if (!(hop_ms > 0.0) || !(frame_ms >= hop_ms))
      throw ConfigError("vad: require frame_ms >= hop_ms > 0");
    if (!(min_speech_ms > 0.0)) throw ConfigError("vad: min_speech_ms must be positive");
    if (min_gap_ms < 0.0) throw ConfigError("vad: min_gap_ms must be non-negative");
  }
};

struct Segment {
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;  // exclusive

  std::size_t length() const { return end_sample - start_sample; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

inline std::size_t ms_to_samples(double ms, int rate) {
  return static_cast<std::size_t>(std::llround(ms * rate / 1000.0));
}

// Frame energies in dB (mean square); -inf for digital silence.
inline std::vector<double> frame_energy_db(const std::vector<double>& x, std::size_t frame, std::size_t hop) {
  std::vector<double> out;
  if (x.size() < frame || frame == 0) return out;
  const std::size_t n_frames = (x.size() - frame) / hop + 1;
  out.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t i = f * hop; i < f * hop + frame; ++i) acc += x[i] * x[i];
    acc /= static_cast<double>(frame);
    out.push_back(acc > 0.0 ? 10.0 * std::log10(acc) : -std::numeric_limits<double>::infinity());
  }
  return out;
}

// Energy VAD with a threshold relative to the whole-buffer RMS, so results do
// not depend on recording gain.
inline std::vector<Segment> vad_segments(const AudioBuffer& buf, const VadConfig& cfg = {}) {
  cfg.validate();
  const auto& x = buf.samples;
  if (x.empty()) return {};
  double total = 0.0;
  for (double s : x) total += s * s;
  if (total <= 0.0) return {};
  const double level_db = 10.0 * std::log10(total / static_cast<double>(x.size()));
  const double threshold = level_db + cfg.energy_threshold_db;

  const std::size_t frame = std::max<std::size_t>(1, ms_to_samples(cfg.frame_ms, buf.sample_rate));
  const std::size_t hop = std::max<std::size_t>(1, ms_to_samples(cfg.hop_ms, buf.sample_rate));
  std::vector<double> energies = frame_energy_db(x, std::min(frame, x.size()), hop);

  std::vector<Segment> runs;
  const std::size_t fl = std::min(frame, x.size());
  for (std::size_t f = 0; f < energies.size(); ++f) {
    if (!(energies[f] > threshold)) continue;
    const Segment s{f * hop, std::min(x.size(), f * hop + fl)};
    if (!runs.empty() && s.start_sample <= runs.back().end_sample)
      runs.back().end_sample = std::max(runs.back().end_sample, s.end_sample);
    else
      runs.push_back(s);
  }

  const std::size_t min_gap = ms_to_samples(cfg.min_gap_ms, buf.sample_rate);
  std::vector<Segment> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.start_sample - merged.back().end_sample < min_gap)
      merged.back().end_sample = r.end_sample;
    else
      merged.push_back(r);
  }
  const std::size_t min_len = ms_to_samples(cfg.min_speech_ms, buf.sample_rate);
  std::vector<Segment> out;
  for (const auto& s : merged)
    if (s.length() >= min_len) out.push_back(s);
  return out;
}

// Intersects VAD segments with externally supplied turn spans (sample units).
inline std::vector<Segment> clip_to_spans(const std::vector<Segment>& segs, const std::vector<Segment>& spans) {
  std::vector<Segment> out;
  for (const auto& s : segs)
    for (const auto& t : spans) {
      const std::size_t a = std::max(s.start_sample, t.start_sample);
      const std::size_t b = std::min(s.end_sample, t.end_sample);
      if (b > a) out.push_back({a, b});
    }
  std::sort(out.begin(), out.end(), [](const Segment& l, const Segment& r) { return l.start_sample < r.start_sample; });
  return out;
}

// Speech-only signal: the concatenation of the given segments.
inline AudioBuffer concat_segments(const AudioBuffer& buf, const std::vector<Segment>& segs) {
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  for (const auto& s : segs)
    out.samples.insert(out.samples.end(), buf.samples.begin() + static_cast<std::ptrdiff_t>(s.start_sample),
                       buf.samples.begin() + static_cast<std::ptrdiff_t>(s.end_sample));
  return out;
}

// One line per segment: speaker_id, start_s, end_s.
inline std::string segments_tsv(const std::string& speaker_id, const std::vector<Segment>& segs, int rate,
                                double offset_s = 0.0) {
  std::string out;
  for (const auto& s : segs) {
    out += speaker_id + "\t" + format_fixed(offset_s + static_cast<double>(s.start_sample) / rate, 4) + "\t" +
           format_fixed(offset_s + static_cast<double>(s.end_sample) / rate, 4) + "\n";
  }
  return out;
}

}  // namespace moodscreen
