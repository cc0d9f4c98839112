#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/text_io.hpp"

namespace moodscreen {

struct AudioBuffer {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }

  void validate() const {
    if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
    for (double s : samples)
      if (!std::isfinite(s)) throw ValidationError("audio contains non-finite samples");
  }

  // Sub-buffer in seconds, clamped to the available range.
  AudioBuffer slice_seconds(double start_s, double end_s) const {
    const auto n = static_cast<double>(samples.size());
    const auto a = static_cast<std::size_t>(std::clamp(std::round(start_s * sample_rate), 0.0, n));
    const auto b = static_cast<std::size_t>(std::clamp(std::round(end_s * sample_rate), 0.0, n));
    AudioBuffer out;
    out.sample_rate = sample_rate;
    if (b > a) out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(a),
                                  samples.begin() + static_cast<std::ptrdiff_t>(b));
    return out;
  }
};

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

// Full-scale positive code maps to exactly +1, most negative code to -1.
inline double scale_int(std::int64_t v, std::int64_t full_scale) {
  return v >= 0 ? static_cast<double>(v) / static_cast<double>(full_scale - 1)
                : static_cast<double>(v) / static_cast<double>(full_scale);
}

}  // namespace detail

// PCM (8/16/24/32-bit integer) or IEEE float WAV; channels averaged to mono.
inline AudioBuffer decode_wav(const std::string& bytes, const std::string& name = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw DataError(name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t len = detail::le32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    const std::size_t avail = n - (pos + 8);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (len < 16 || avail < 16) throw DataError(name + ": truncated fmt chunk");
      format = detail::le16(body);
      channels = detail::le16(body + 2);
      rate = detail::le32(body + 4);
      bits = detail::le16(body + 14);
      if (format == 0xFFFE) {
        if (len < 40 || avail < 40) throw DataError(name + ": truncated extensible fmt chunk");
        format = detail::le16(body + 24);
      }
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      data = body;
      data_len = std::min<std::size_t>(len, avail);
    }
    pos += 8 + len + (len & 1u);
  }
  if (format == 0) throw DataError(name + ": missing fmt chunk");
  if (!data) throw DataError(name + ": missing data chunk");
  if (channels == 0 || rate == 0) throw DataError(name + ": corrupt header (zero channels or rate)");
  const bool is_int = format == 1 && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool is_float = format == 3 && (bits == 32 || bits == 64);
  if (!is_int && !is_float)
    throw DataError(name + ": unsupported encoding (format " + std::to_string(format) + ", " +
                    std::to_string(bits) + " bits)");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  AudioBuffer out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + (f * channels + c) * width;
      double v = 0.0;
      if (is_int) {
        switch (bits) {
          case 8: v = detail::scale_int(static_cast<std::int64_t>(s[0]) - 128, 128); break;
          case 16: v = detail::scale_int(static_cast<std::int16_t>(detail::le16(s)), 32768); break;
          case 24: {
            std::int32_t x = s[0] | (s[1] << 8) | (s[2] << 16);
            if (x & 0x800000) x -= 0x1000000;
            v = detail::scale_int(x, 8388608);
            break;
          }
          default: v = detail::scale_int(static_cast<std::int32_t>(detail::le32(s)), 2147483648LL);
        }
      } else if (bits == 32) {
        float fv;
        std::uint32_t u = detail::le32(s);
        std::memcpy(&fv, &u, 4);
        v = fv;
      } else {
        double dv;
        std::memcpy(&dv, s, 8);
        v = dv;
      }
      if (!std::isfinite(v)) throw DataError(name + ": non-finite sample");
      acc += std::clamp(v, -1.0, 1.0);
    }
    out.samples[f] = acc / channels;
  }
  return out;
}

inline AudioBuffer load_wav(const std::filesystem::path& path) {
  return decode_wav(read_file(path), path.string());
}

// 16-bit PCM, interleaved channels.
inline std::string encode_wav16(const std::vector<std::vector<double>>& channels, int sample_rate) {
  const std::size_t nch = channels.size();
  const std::size_t frames = nch ? channels[0].size() : 0;
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * nch * 2);
  std::string out;
  out.reserve(44 + data_len);
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
  };
  out += "RIFF";
  put32(36 + data_len);
  out += "WAVEfmt ";
  put32(16);
  put16(1);
  put16(static_cast<std::uint16_t>(nch));
  put32(static_cast<std::uint32_t>(sample_rate));
  put32(static_cast<std::uint32_t>(sample_rate * nch * 2));
  put16(static_cast<std::uint16_t>(nch * 2));
  put16(16);
  out += "data";
  put32(data_len);
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t c = 0; c < nch; ++c) {
      const double v = std::clamp(channels[c][f], -1.0, 1.0);
      const auto q = static_cast<std::int16_t>(std::lround(v >= 0 ? v * 32767.0 : v * 32768.0));
      put16(static_cast<std::uint16_t>(q));
    }
  return out;
}

inline void save_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
  write_file(path, encode_wav16({buf.samples}, buf.sample_rate));
}

}  // namespace moodscreen
