#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/parallel.hpp"
#include "moodscreen/core/text_io.hpp"
#include "moodscreen/feature_matrix.hpp"

namespace moodscreen {

inline constexpr std::size_t kExactMaxTotal = 20;
inline constexpr double kSelectionAlpha = 0.05;
inline constexpr double kSelectionMinEffect = 0.30;

// Average ranks (1-based) with ties sharing the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

struct MannWhitneyResult {
  double u = 0.0;  // U of sample_a
  double z = 0.0;  // sign of (U - n_a n_b / 2)
  double p = 1.0;  // two-sided
  bool exact = false;
};

namespace detail {

// Number of size-k subsets of `doubled_ranks` whose sum deviates from the
// null mean at least as far as the observed sum.
inline double exact_two_sided_p(const std::vector<int>& doubled_ranks, std::size_t k, long long observed_sum) {
  const std::size_t n = doubled_ranks.size();
  const int max_sum = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0);
  // ways[j][s]: subsets of size j with doubled-rank sum s
  std::vector<std::vector<double>> ways(k + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = doubled_ranks[i];
    for (std::size_t j = std::min(k, i + 1); j >= 1; --j)
      for (int s = max_sum; s >= r; --s) ways[j][static_cast<std::size_t>(s)] += ways[j - 1][static_cast<std::size_t>(s - r)];
  }
  // null mean of the doubled sum is k (n + 1)
  const long long centre = static_cast<long long>(k) * static_cast<long long>(n + 1);
  const long long obs_dev = std::llabs(observed_sum - centre);
  double hit = 0.0, total = 0.0;
  for (int s = 0; s <= max_sum; ++s) {
    const double w = ways[k][static_cast<std::size_t>(s)];
    total += w;
    if (std::llabs(static_cast<long long>(s) - centre) >= obs_dev) hit += w;
  }
  return total > 0.0 ? hit / total : 1.0;
}

}  // namespace detail

// Rank-sum test. Exact enumeration for n_a + n_b <= 20, otherwise the normal
// approximation with tie and continuity corrections.
inline MannWhitneyResult mann_whitney(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty()) throw ValidationError("mann_whitney: both samples must be non-empty");
  const std::size_t na = sample_a.size(), nb = sample_b.size(), n = na + nb;
  std::vector<double> pooled(sample_a.begin(), sample_a.end());
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  const auto ranks = average_ranks(pooled);
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];

  MannWhitneyResult res;
  res.u = rank_sum_a - static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
  const double mu = static_cast<double>(na) * static_cast<double>(nb) / 2.0;

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double nd = static_cast<double>(n);
  const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                     ((nd + 1.0) - (n > 1 ? tie_term / (nd * (nd - 1.0)) : 0.0));
  const double dev = res.u - mu;
  if (var > 0.0) {
    const double corrected = std::max(std::abs(dev) - 0.5, 0.0);
    res.z = (dev < 0 ? -1.0 : 1.0) * corrected / std::sqrt(var);
    if (dev == 0.0) res.z = 0.0;
  }

  if (n <= kExactMaxTotal) {
    std::vector<int> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
    res.p = detail::exact_two_sided_p(doubled, na, std::llround(2.0 * rank_sum_a));
    res.exact = true;
  } else {
    res.p = var > 0.0 ? std::min(1.0, std::erfc(std::abs(res.z) / std::sqrt(2.0))) : 1.0;
  }
  return res;
}

// Effect size for rank tests.
inline double cohen_r(double z, std::size_t n_total) {
  if (n_total < 2) throw ValidationError("cohen_r: need at least two observations");
  return std::abs(z) / std::sqrt(static_cast<double>(n_total));
}

struct FeatureTestResult {
  std::string feature_name;
  double u_statistic = 0.0;
  double z_value = 0.0;
  double p_value = 1.0;
  double cohen_r = 0.0;
  bool selected = false;
};

inline bool passes_selection(double p, double r) { return p < kSelectionAlpha && r >= kSelectionMinEffect; }

// One Mann-Whitney test per column, depression rows as sample a. No
// multiple-comparison correction. Results ordered by feature name.
inline std::vector<FeatureTestResult> select_features(const FeatureMatrix& m, std::size_t threads = 1) {
  if (m.count(Label::depression) == 0 || m.count(Label::no_depression) == 0)
    throw DegenerateTaskError("feature selection needs both classes");
  std::vector<FeatureTestResult> out(m.cols());
  parallel_for(m.cols(), threads, [&](std::size_t c) {
    std::vector<double> a, b;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double v = m.at(r, c);
      if (is_missing(v)) continue;
      (m.labels[r] == Label::depression ? a : b).push_back(v);
    }
    FeatureTestResult res;
    res.feature_name = m.names[c];
    if (!a.empty() && !b.empty()) {
      const auto mw = mann_whitney(a, b);
      res.u_statistic = mw.u;
      res.z_value = mw.z;
      res.p_value = mw.p;
      res.cohen_r = cohen_r(mw.z, a.size() + b.size());
      res.selected = passes_selection(res.p_value, res.cohen_r);
    }
    out[c] = res;
  });
  std::sort(out.begin(), out.end(),
            [](const FeatureTestResult& x, const FeatureTestResult& y) { return x.feature_name < y.feature_name; });
  return out;
}

inline std::vector<std::string> selected_names(const std::vector<FeatureTestResult>& results) {
  std::vector<std::string> out;
  for (const auto& r : results)
    if (r.selected) out.push_back(r.feature_name);
  return out;
}

inline std::string feature_tests_tsv(const std::vector<FeatureTestResult>& results) {
  std::string out = "feature_name\tu\tz\tp\tr\tselected\n";
  for (const auto& r : results)
    out += r.feature_name + "\t" + format_fixed(r.u_statistic, 4) + "\t" + format_fixed(r.z_value, 6) + "\t" +
           format_fixed(r.p_value, 8) + "\t" + format_fixed(r.cohen_r, 6) + "\t" + (r.selected ? "1" : "0") + "\n";
  return out;
}

}  // namespace moodscreen
