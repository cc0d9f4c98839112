#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "moodscreen/core/error.hpp"

namespace moodscreen {

inline constexpr std::size_t kMaxBins = 256;

// Training matrix quantized per feature. Cut points are observed training
// values chosen by rank, so a strictly increasing transform of a feature
// yields the same partition of the rows.
struct BinnedMatrix {
  std::size_t n = 0, dim = 0;
  std::vector<std::vector<double>> cuts;  // ascending, at most kMaxBins - 1 per feature
  std::vector<std::uint8_t> codes;        // column-major: codes[f * n + i]

  std::uint8_t code(std::size_t f, std::size_t i) const { return codes[f * n + i]; }
  std::size_t bins(std::size_t f) const { return cuts[f].size() + 1; }
};

inline BinnedMatrix bin_matrix(std::span<const double> x, std::size_t n) {
  if (n == 0 || x.size() % n != 0) throw DataError("trees: malformed training matrix");
  BinnedMatrix b;
  b.n = n;
  b.dim = x.size() / n;
  b.cuts.resize(b.dim);
  b.codes.resize(b.dim * n);
  std::vector<double> col(n);
  for (std::size_t f = 0; f < b.dim; ++f) {
    for (std::size_t i = 0; i < n; ++i) col[i] = x[i * b.dim + f];
    std::sort(col.begin(), col.end());
    auto& cuts = b.cuts[f];
    std::vector<double> uniq(col.begin(), std::unique(col.begin(), col.end()));
    if (uniq.size() <= kMaxBins) {
      cuts.assign(uniq.begin(), uniq.end() - 1);
    } else {
      for (std::size_t k = 1; k < kMaxBins; ++k) {
        const std::size_t idx = (k * n + kMaxBins - 1) / kMaxBins - 1;
        const double v = col[std::min(idx, n - 1)];
        if (v < uniq.back() && (cuts.empty() || v > cuts.back())) cuts.push_back(v);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x[i * b.dim + f];
      b.codes[f * n + i] =
          static_cast<std::uint8_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    }
  }
  return b;
}

struct TreeNode {
  std::int32_t feature = -1;  // -1 for a leaf
  std::int32_t left = -1, right = -1;
  std::uint16_t bin = 0;      // rows with code <= bin go left
  double threshold = 0.0;     // values <= threshold go left
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    std::size_t k = 0;
    while (nodes[k].feature >= 0)
      k = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[k].feature)] <= nodes[k].threshold ? nodes[k].left
                                                                                                          : nodes[k].right);
    return nodes[k].value;
  }

  double predict_binned(const BinnedMatrix& b, std::size_t row) const {
    std::size_t k = 0;
    while (nodes[k].feature >= 0)
      k = static_cast<std::size_t>(b.code(static_cast<std::size_t>(nodes[k].feature), row) <= nodes[k].bin
                                       ? nodes[k].left
                                       : nodes[k].right);
    return nodes[k].value;
  }

  std::size_t depth() const {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t best = 0;
    while (!stack.empty()) {
      auto [k, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (nodes[k].feature >= 0) {
        stack.push_back({static_cast<std::size_t>(nodes[k].left), d + 1});
        stack.push_back({static_cast<std::size_t>(nodes[k].right), d + 1});
      }
    }
    return best;
  }
};

// Partition rows[begin, end) so codes <= bin come first; returns the split point.
inline std::size_t partition_rows(std::vector<std::uint32_t>& rows, std::size_t begin, std::size_t end,
                                  const BinnedMatrix& b, std::size_t feature, std::uint16_t bin) {
  const std::uint8_t* col = b.codes.data() + feature * b.n;
  auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                   rows.begin() + static_cast<std::ptrdiff_t>(end),
                                   [&](std::uint32_t r) { return col[r] <= bin; });
  return static_cast<std::size_t>(mid - rows.begin());
}

}  // namespace moodscreen
