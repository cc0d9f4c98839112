#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace moodscreen {

// Analysis grid shared by every frame-level descriptor.
inline constexpr double kFrameMs = 25.0;
inline constexpr double kHopMs = 10.0;

struct LldTrack {
  std::string name;
  std::vector<double> values;
  double frame_hop_ms = kHopMs;
  std::vector<std::uint8_t> mask;  // empty = every frame valid; else 1 = valid (voiced / defined)

  bool valid(std::size_t i) const { return mask.empty() || mask[i] != 0; }
  std::size_t valid_count() const {
    if (mask.empty()) return values.size();
    std::size_t n = 0;
    for (auto m : mask) n += m != 0;
    return n;
  }
};

using NamedValues = std::map<std::string, std::optional<double>>;

inline std::size_t frame_count(std::size_t n_samples, std::size_t frame, std::size_t hop) {
  return n_samples < frame ? 0 : (n_samples - frame) / hop + 1;
}

}  // namespace moodscreen
