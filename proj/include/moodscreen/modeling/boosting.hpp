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

struct BoostParams {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  double colsample = 1.0;  // per tree
  double subsample = 1.0;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  double min_split_gain = 1e-6;
  std::uint64_t seed = 42;

  bool operator==(const BoostParams&) const = default;
};

struct BoostModel {
  std::size_t dim = 0;
  double base_margin = 0.0;
  std::vector<Tree> trees;  // leaf values already include the learning rate

  double margin(std::span<const double> x, std::size_t n_trees = 0) const {
    if (x.size() != dim) throw DataError("gbt: feature dimension mismatch");
    if (n_trees == 0 || n_trees > trees.size()) n_trees = trees.size();
    double m = base_margin;
    for (std::size_t t = 0; t < n_trees; ++t) m += trees[t].predict(x);
    return m;
  }

  double score(std::span<const double> x, std::size_t n_trees = 0) const {
    return 1.0 / (1.0 + std::exp(-margin(x, n_trees)));
  }
};

namespace detail {

struct GradHist {
  std::array<double, kMaxBins> g{}, h{};
};

inline Tree grow_boost_tree(const BinnedMatrix& b, std::span<const double> grad, std::span<const double> hess,
                            std::vector<std::uint32_t> rows, std::span<const std::size_t> features,
                            const BoostParams& p) {
  Tree tree;
  struct Pending {
    std::size_t node, begin, end, depth;
  };
  std::vector<Pending> stack{{0, 0, rows.size(), 0}};
  tree.nodes.emplace_back();
  GradHist hist;
  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    double G = 0, H = 0;
    for (std::size_t k = cur.begin; k < cur.end; ++k) {
      G += grad[rows[k]];
      H += hess[rows[k]];
    }
    tree.nodes[cur.node].value = -G / (H + p.lambda) * p.learning_rate;
    if (cur.depth >= p.max_depth || H < 2 * p.min_child_weight) continue;

    const double parent = G * G / (H + p.lambda);
    double best_gain = p.min_split_gain;
    bool found = false;
    std::size_t best_f = 0;
    std::uint16_t best_bin = 0;
    for (std::size_t f : features) {
      const std::uint8_t* col = b.codes.data() + f * b.n;
      std::size_t lo = kMaxBins, hi = 0;
      for (std::size_t j = cur.begin; j < cur.end; ++j) {
        const std::size_t c = col[rows[j]];
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      if (lo == hi) continue;
      for (std::size_t c = lo; c <= hi; ++c) hist.g[c] = hist.h[c] = 0.0;
      for (std::size_t j = cur.begin; j < cur.end; ++j) {
        const auto r = rows[j];
        hist.g[col[r]] += grad[r];
        hist.h[col[r]] += hess[r];
      }
      double gl = 0, hl = 0;
      for (std::size_t c = lo; c < hi; ++c) {
        gl += hist.g[c];
        hl += hist.h[c];
        const double gr = G - gl, hr = H - hl;
        if (hl < p.min_child_weight || hr < p.min_child_weight) continue;
        const double gain = 0.5 * (gl * gl / (hl + p.lambda) + gr * gr / (hr + p.lambda) - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          best_bin = static_cast<std::uint16_t>(c);
          found = true;
        }
      }
    }
    if (!found) continue;
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
    stack.push_back({static_cast<std::size_t>(left + 1), mid, cur.end, cur.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), cur.begin, mid, cur.depth + 1});
  }
  return tree;
}

}  // namespace detail

// Second-order boosting on the logistic loss. Round t samples rows and
// columns from stream (seed, t); class weights scale gradients and hessians.
inline BoostModel fit_boosting(std::span<const double> x, std::span<const Label> labels, const BoostParams& p,
                               const ClassWeights& weights = {}) {
  const std::size_t n = labels.size();
  if (p.n_estimators == 0) throw ConfigError("gbt: n_estimators must be positive");
  if (!(p.subsample > 0 && p.subsample <= 1) || !(p.colsample > 0 && p.colsample <= 1))
    throw ConfigError("gbt: subsample and colsample must lie in (0, 1]");
  const BinnedMatrix b = bin_matrix(x, n);
  BoostModel model;
  model.dim = b.dim;
  std::vector<double> margin(n, model.base_margin), grad(n), hess(n), w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = weights.of(labels[i]);
  const std::size_t n_rows = std::max<std::size_t>(1, static_cast<std::size_t>(p.subsample * static_cast<double>(n)));
  const std::size_t n_cols =
      std::max<std::size_t>(1, static_cast<std::size_t>(p.colsample * static_cast<double>(b.dim)));
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  std::vector<std::size_t> cols(b.dim);
  for (std::size_t t = 0; t < p.n_estimators; ++t) {
    Rng rng = Rng::derive(p.seed, t);
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-margin[i]));
      const double y = labels[i] == Label::depression ? 1.0 : 0.0;
      grad[i] = w[i] * (prob - y);
      hess[i] = w[i] * std::max(prob * (1.0 - prob), 1e-16);
    }
    std::vector<std::uint32_t> rows = all;
    if (n_rows < n) {
      for (std::size_t k = 0; k < n_rows; ++k) std::swap(rows[k], rows[k + rng.index(n - k)]);
      rows.resize(n_rows);
      std::sort(rows.begin(), rows.end());
    }
    std::iota(cols.begin(), cols.end(), 0);
    if (n_cols < b.dim) {
      for (std::size_t k = 0; k < n_cols; ++k) std::swap(cols[k], cols[k + rng.index(b.dim - k)]);
    }
    std::vector<std::size_t> chosen(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(n_cols));
    std::sort(chosen.begin(), chosen.end());
    model.trees.push_back(detail::grow_boost_tree(b, grad, hess, std::move(rows), chosen, p));
    const Tree& tree = model.trees.back();
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict_binned(b, i);
  }
  return model;
}

}  // namespace moodscreen
