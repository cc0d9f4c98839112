#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "moodscreen/core/error.hpp"

namespace moodscreen {

enum class FeatureSet { praat, egemaps, ser_dims, wav2vec2, roberta, psycholing };

inline const char* feature_set_name(FeatureSet s) {
  switch (s) {
    case FeatureSet::praat: return "praat";
    case FeatureSet::egemaps: return "egemaps";
    case FeatureSet::ser_dims: return "ser_dims";
    case FeatureSet::wav2vec2: return "wav2vec2";
    case FeatureSet::roberta: return "roberta";
    default: return "psycholing";
  }
}

inline FeatureSet parse_feature_set(const std::string& s) {
  for (auto fs : {FeatureSet::praat, FeatureSet::egemaps, FeatureSet::ser_dims, FeatureSet::wav2vec2,
                  FeatureSet::roberta, FeatureSet::psycholing})
    if (s == feature_set_name(fs)) return fs;
  throw ConfigError("unknown feature set '" + s + "'");
}

// Neural sets arrive precomputed; the rest are computed by this library.
inline bool is_sidecar_set(FeatureSet s) {
  return s == FeatureSet::ser_dims || s == FeatureSet::wav2vec2 || s == FeatureSet::roberta;
}

// Sets excluded from exploratory selection (high-dimensional embeddings).
inline bool is_selectable_set(FeatureSet s) { return s != FeatureSet::wav2vec2 && s != FeatureSet::roberta; }

struct FeatureVector {
  FeatureSet set = FeatureSet::praat;
  std::vector<std::string> names;
  std::vector<std::optional<double>> values;  // nullopt = missing; never NaN/Inf

  std::size_t size() const { return names.size(); }

  void push(std::string name, std::optional<double> v) {
    if (v && !std::isfinite(*v)) v.reset();
    names.push_back(std::move(name));
    values.push_back(v);
  }

  void validate() const {
    if (names.size() != values.size()) throw DataError("feature vector names/values length mismatch");
    std::set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) throw DataError("duplicate feature name " + n);
    for (const auto& v : values)
      if (v && !std::isfinite(*v)) throw DataError("non-finite feature value");
  }
};

}  // namespace moodscreen
