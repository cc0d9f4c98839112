#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "moodscreen/acoustic/feature_vector.hpp"
#include "moodscreen/core/error.hpp"
#include "moodscreen/core/text_io.hpp"

namespace moodscreen {

inline std::size_t sidecar_dim(FeatureSet s) {
  switch (s) {
    case FeatureSet::wav2vec2: return 1024;
    case FeatureSet::ser_dims: return 3;
    case FeatureSet::roberta: return 768;
    default: throw ConfigError(std::string(feature_set_name(s)) + " is not a sidecar feature set");
  }
}

inline std::vector<std::string> sidecar_names(FeatureSet s) {
  if (s == FeatureSet::ser_dims) return {"arousal", "valence", "dominance"};
  const std::string prefix = s == FeatureSet::wav2vec2 ? "w2v_" : "roberta_";
  std::vector<std::string> out;
  const std::size_t dim = sidecar_dim(s);
  for (std::size_t i = 0; i < dim; ++i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04zu", i);
    out.push_back(prefix + buf);
  }
  return out;
}

struct SidecarVector {
  FeatureSet set = FeatureSet::ser_dims;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

struct SerDims {
  double arousal = 0.0;
  double valence = 0.0;
  double dominance = 0.0;

  static SerDims from(const SidecarVector& v) {
    if (v.set != FeatureSet::ser_dims || v.values.size() != 3) throw DataError("not an SER dimension vector");
    return {v.values[0], v.values[1], v.values[2]};
  }
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& dir, const std::string& key, FeatureSet set) {
  return dir / (key + "." + feature_set_name(set) + ".vec");
}

// One whitespace-separated line of decimals; "NA" marks a missing value.
inline std::vector<std::optional<double>> parse_vector_line(std::string_view content, const std::string& name) {
  std::vector<std::optional<double>> out;
  for (const auto& tok : split_whitespace(content)) {
    if (tok == "NA") {
      out.emplace_back();
      continue;
    }
    const auto v = parse_double(tok);
    if (!v) throw DataError(name + ": bad number '" + tok + "'");
    if (!std::isfinite(*v)) throw DataError(name + ": non-finite value");
    out.emplace_back(*v);
  }
  return out;
}

inline std::string format_vector_line(std::span<const std::optional<double>> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(' ');
    out += values[i] ? format_double(*values[i]) : "NA";
  }
  out.push_back('\n');
  return out;
}

// Missing file -> nullopt (the caller records the exclusion); wrong width or
// missing entries -> DataError.
inline std::optional<SidecarVector> read_sidecar(const std::filesystem::path& dir, const std::string& key, FeatureSet set) {
  const auto path = sidecar_path(dir, key, set);
  if (!std::filesystem::exists(path)) return std::nullopt;
  const auto values = parse_vector_line(read_file(path), path.string());
  const std::size_t want = sidecar_dim(set);
  if (values.size() != want)
    throw DataError(path.string() + ": " + feature_set_name(set) + " expects " + std::to_string(want) +
                    " values, found " + std::to_string(values.size()));
  SidecarVector out{set, {}};
  out.values.reserve(want);
  for (const auto& v : values) {
    if (!v) throw DataError(path.string() + ": missing value in neural sidecar");
    out.values.push_back(*v);
  }
  return out;
}

inline void write_sidecar(const std::filesystem::path& dir, const std::string& key, const SidecarVector& v) {
  if (v.values.size() != sidecar_dim(v.set))
    throw DataError(std::string("refusing to write ") + feature_set_name(v.set) + " sidecar of wrong width");
  std::vector<std::optional<double>> tmp(v.values.begin(), v.values.end());
  write_file(sidecar_path(dir, key, v.set), format_vector_line(tmp));
}

// Computed feature vectors use the same file layout; names live in the run's
// feature inventory, so only values are stored.
inline void write_feature_file(const std::filesystem::path& dir, const std::string& key, const FeatureVector& v) {
  write_file(sidecar_path(dir, key, v.set), format_vector_line(v.values));
}

inline std::optional<std::vector<std::optional<double>>> read_feature_file(const std::filesystem::path& dir,
                                                                           const std::string& key, FeatureSet set,
                                                                           std::size_t expected_dim) {
  const auto path = sidecar_path(dir, key, set);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto values = parse_vector_line(read_file(path), path.string());
  if (values.size() != expected_dim)
    throw DataError(path.string() + ": expected " + std::to_string(expected_dim) + " values, found " +
                    std::to_string(values.size()));
  return values;
}

// Column-wise mean of frame-level encoder outputs.
inline std::vector<double> mean_pool(const std::vector<std::vector<double>>& frames) {
  if (frames.empty()) throw DataError("mean_pool: no frames");
  const std::size_t dim = frames.front().size();
  std::vector<double> out(dim, 0.0);
  for (const auto& f : frames) {
    if (f.size() != dim) throw DataError("mean_pool: ragged frame matrix");
    for (std::size_t i = 0; i < dim; ++i) out[i] += f[i];
  }
  for (auto& v : out) v /= static_cast<double>(frames.size());
  return out;
}

inline constexpr const char* kSidecarIndex = "sidecar_index.tsv";

// Index lines: segment_key<TAB>set_name.
inline void write_sidecar_index(const std::filesystem::path& dir,
                                const std::vector<std::pair<std::string, FeatureSet>>& entries) {
  std::string out;
  for (const auto& [key, set] : entries) out += key + "\t" + feature_set_name(set) + "\n";
  write_file(dir / kSidecarIndex, out);
}

// Keys listed in the index whose file is absent.
inline std::vector<std::string> check_sidecar_index(const std::filesystem::path& dir) {
  std::vector<std::string> missing;
  for (const auto& line : read_lines(dir / kSidecarIndex)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, '\t');
    if (cells.size() != 2) throw DataError(std::string(kSidecarIndex) + ": malformed line");
    if (!std::filesystem::exists(sidecar_path(dir, cells[0], parse_feature_set(cells[1]))))
      missing.push_back(cells[0] + "." + cells[1]);
  }
  return missing;
}

}  // namespace moodscreen
