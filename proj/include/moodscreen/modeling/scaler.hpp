#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/quantile.hpp"
#include "moodscreen/feature_matrix.hpp"

namespace moodscreen {

struct RobustScalerParams {
  std::string corpus_id;
  std::vector<std::string> names;
  std::vector<double> median;
  std::vector<double> iqr;  // p75 - p25, linear interpolation; 0 means centre only
};

inline RobustScalerParams fit_robust_scaler(const FeatureMatrix& m, const std::string& corpus_id) {
  if (m.rows() < 2) throw DataError("fit_robust_scaler: need at least 2 rows for corpus " + corpus_id);
  m.require_complete("fit_robust_scaler");
  RobustScalerParams p;
  p.corpus_id = corpus_id;
  p.names = m.names;
  p.median.resize(m.cols());
  p.iqr.resize(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    auto col = m.column(c);
    std::sort(col.begin(), col.end());
    p.median[c] = percentile_sorted(col, 50.0);
    p.iqr[c] = percentile_sorted(col, 75.0) - percentile_sorted(col, 25.0);
  }
  return p;
}

inline FeatureMatrix apply(const RobustScalerParams& p, FeatureMatrix m) {
  if (m.names != p.names) throw DataError("scaler feature names do not match matrix");
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double& v = m.at(r, c);
      v -= p.median[c];
      if (p.iqr[c] > 0) v /= p.iqr[c];
    }
  return m;
}

}  // namespace moodscreen
