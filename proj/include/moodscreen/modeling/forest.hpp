#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/rng.hpp"
#include "moodscreen/modeling/class_weights.hpp"
#include "moodscreen/modeling/trees.hpp"

namespace moodscreen {

enum class Criterion { gini, entropy };

inline const char* criterion_name(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

struct ForestParams {
  std::size_t n_estimators = 100;
  Criterion criterion = Criterion::gini;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0: floor(sqrt(d))
  std::uint64_t seed = 42;

  bool operator==(const ForestParams&) const = default;
};

struct ForestModel {
  std::size_t dim = 0;
  std::vector<Tree> trees;

  // Mean depression probability over the first n_trees trees (all if 0).
  double score(std::span<const double> x, std::size_t n_trees = 0) const {
    if (x.size() != dim) throw DataError("rf: feature dimension mismatch");
    if (n_trees == 0 || n_trees > trees.size()) n_trees = trees.size();
    double s = 0.0;
    for (std::size_t t = 0; t < n_trees; ++t) s += trees[t].predict(x);
    return s / static_cast<double>(n_trees);
  }
};

namespace detail {

inline double impurity(Criterion c, double pos, double neg) {
  const double w = pos + neg;
  if (w <= 0) return 0.0;
  const double p = pos / w, q = neg / w;
  if (c == Criterion::gini) return 1.0 - p * p - q * q;
  double h = 0.0;
  if (p > 0) h -= p * std::log2(p);
  if (q > 0) h -= q * std::log2(q);
  return h;
}

struct ClassHist {
  std::array<double, kMaxBins> pos{}, neg{};
  std::array<std::uint32_t, kMaxBins> count{};
};

inline Tree grow_classification_tree(const BinnedMatrix& b, std::span<const Label> labels,
                                     std::vector<std::uint32_t> rows, std::span<const double> row_weight,
                                     const ForestParams& p, std::size_t mtry, Rng& rng) {
  Tree tree;
  struct Pending {
    std::size_t node, begin, end;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, rows.size()});
  std::vector<std::size_t> features(b.dim);
  ClassHist hist;

  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    double wpos = 0, wneg = 0;
    for (std::size_t k = cur.begin; k < cur.end; ++k) {
      const auto r = rows[k];
      (labels[r] == Label::depression ? wpos : wneg) += row_weight[r];
    }
    tree.nodes[cur.node].value = wpos + wneg > 0 ? wpos / (wpos + wneg) : 0.0;
    const std::size_t n_node = cur.end - cur.begin;
    if (n_node < p.min_samples_split || wpos == 0 || wneg == 0) continue;

    const double parent = impurity(p.criterion, wpos, wneg) * (wpos + wneg);
    double best_gain = -1.0;
    std::size_t best_f = 0;
    std::uint16_t best_bin = 0;
    std::iota(features.begin(), features.end(), 0);
    std::size_t visited = 0;
    for (std::size_t k = 0; k < b.dim && visited < mtry; ++k) {
      const std::size_t pick = k + rng.index(b.dim - k);
      std::swap(features[k], features[pick]);
      const std::size_t f = features[k];
      const std::uint8_t* col = b.codes.data() + f * b.n;
      std::size_t lo = kMaxBins, hi = 0;
      for (std::size_t j = cur.begin; j < cur.end; ++j) {
        const std::size_t c = col[rows[j]];
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      if (lo == hi) continue;  // constant in this node; does not count towards mtry
      ++visited;
      for (std::size_t c = lo; c <= hi; ++c) {
        hist.pos[c] = hist.neg[c] = 0.0;
        hist.count[c] = 0;
      }
      for (std::size_t j = cur.begin; j < cur.end; ++j) {
        const auto r = rows[j];
        const std::size_t c = col[r];
        (labels[r] == Label::depression ? hist.pos[c] : hist.neg[c]) += row_weight[r];
        ++hist.count[c];
      }
      double lp = 0, ln = 0;
      for (std::size_t c = lo; c < hi; ++c) {
        lp += hist.pos[c];
        ln += hist.neg[c];
        if (hist.count[c] == 0) continue;
        const double rp = wpos - lp, rn = wneg - ln;
        const double gain =
            parent - impurity(p.criterion, lp, ln) * (lp + ln) - impurity(p.criterion, rp, rn) * (rp + rn);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_f = f;
          best_bin = static_cast<std::uint16_t>(c);
        }
      }
    }
    if (best_gain < 0) continue;

    const std::size_t mid = partition_rows(rows, cur.begin, cur.end, b, best_f, best_bin);
    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[cur.node];
    node.feature = static_cast<std::int32_t>(best_f);
    node.bin = best_bin;
    node.threshold = b.cuts[best_f][best_bin];
    node.left = left;
    node.right = left + 1;
    stack.push_back({static_cast<std::size_t>(left + 1), mid, cur.end});
    stack.push_back({static_cast<std::size_t>(left), cur.begin, mid});
  }
  return tree;
}

}  // namespace detail

// Tree t draws from its own stream (seed, t), so the first k trees of a
// larger forest equal a forest fitted with n_estimators = k.
inline ForestModel fit_forest(std::span<const double> x, std::span<const Label> labels, const ForestParams& p,
                              const ClassWeights& weights = {}) {
  const std::size_t n = labels.size();
  if (p.n_estimators == 0) throw ConfigError("rf: n_estimators must be positive");
  if (p.min_samples_split < 2) throw ConfigError("rf: min_samples_split must be >= 2");
  const BinnedMatrix b = bin_matrix(x, n);
  const std::size_t mtry =
      p.max_features > 0 ? std::min(p.max_features, b.dim)
                         : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(b.dim))));
  ForestModel model;
  model.dim = b.dim;
  model.trees.reserve(p.n_estimators);
  std::vector<double> w(n);
  std::vector<std::uint32_t> counts(n);
  for (std::size_t t = 0; t < p.n_estimators; ++t) {
    Rng rng = Rng::derive(p.seed, t);
    std::vector<std::uint32_t> rows;
    if (p.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t k = 0; k < n; ++k) ++counts[rng.index(n)];
      for (std::size_t i = 0; i < n; ++i)
        if (counts[i] > 0) rows.push_back(static_cast<std::uint32_t>(i));
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0u);
      std::fill(counts.begin(), counts.end(), 1);
    }
    for (std::size_t i = 0; i < n; ++i) w[i] = counts[i] * weights.of(labels[i]);
    model.trees.push_back(detail::grow_classification_tree(b, labels, std::move(rows), w, p, mtry, rng));
  }
  return model;
}

}  // namespace moodscreen
