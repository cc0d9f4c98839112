#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <span>
#include <string>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/modeling/class_weights.hpp"

namespace moodscreen {

enum class Kernel { linear, rbf };
enum class GammaMode { scale, automatic };

inline const char* kernel_name(Kernel k) { return k == Kernel::linear ? "linear" : "rbf"; }
inline const char* gamma_name(GammaMode g) { return g == GammaMode::scale ? "scale" : "auto"; }

struct SvmParams {
  double C = 1.0;
  Kernel kernel = Kernel::rbf;
  GammaMode gamma = GammaMode::scale;
  double tolerance = 1e-4;
  std::size_t max_iter = 100000;
  std::size_t cache_mb = 200;

  bool operator==(const SvmParams&) const = default;
};

struct SvmModel {
  Kernel kernel = Kernel::rbf;
  double gamma = 1.0;
  std::size_t dim = 0;
  std::vector<double> support;  // row-major support vectors
  std::vector<double> coef;     // alpha_i * y_i
  std::vector<double> w;        // primal weights for the linear kernel
  double rho = 0.0;
  std::size_t iterations = 0;
  bool converged = true;

  std::size_t n_support() const { return coef.size(); }

  double decision(std::span<const double> x) const {
    if (x.size() != dim) throw DataError("svm: feature dimension mismatch");
    double s = 0.0;
    if (kernel == Kernel::linear) {
      for (std::size_t k = 0; k < dim; ++k) s += w[k] * x[k];
    } else {
      for (std::size_t i = 0; i < coef.size(); ++i) {
        const double* sv = support.data() + i * dim;
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double t = sv[k] - x[k];
          d2 += t * t;
        }
        s += coef[i] * std::exp(-gamma * d2);
      }
    }
    return s - rho;
  }

  double score(std::span<const double> x) const { return 1.0 / (1.0 + std::exp(-decision(x))); }
};

inline double svm_gamma(GammaMode mode, std::span<const double> x, std::size_t dim) {
  if (dim == 0) throw DataError("svm: no features");
  if (mode == GammaMode::automatic) return 1.0 / static_cast<double>(dim);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  return var > 0 ? 1.0 / (static_cast<double>(dim) * var) : 1.0;
}

namespace detail {

// Kernel rows with a least-recently-used budget.
class KernelCache {
public:
  KernelCache(std::span<const double> x, std::size_t n, std::size_t dim, Kernel kernel, double gamma, std::size_t mb)
      : x_(x), n_(n), dim_(dim), kernel_(kernel), gamma_(gamma), rows_(n), where_(n, lru_.end()) {
    norms_.resize(n);
    for (std::size_t i = 0; i < n; ++i) norms_[i] = dot(i, i);
    const std::size_t bytes = std::max<std::size_t>(mb, 1) << 20;
    capacity_ = std::max<std::size_t>(2, bytes / (std::max<std::size_t>(n, 1) * sizeof(double)));
  }

  double diag(std::size_t i) const { return kernel_ == Kernel::linear ? norms_[i] : 1.0; }

  const std::vector<double>& row(std::size_t i) {
    if (!rows_[i].empty()) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i];
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      std::vector<double>().swap(rows_[victim]);
      where_[victim] = lru_.end();
    }
    auto& r = rows_[i];
    r.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double d = dot(i, j);
      r[j] = kernel_ == Kernel::linear ? d : std::exp(-gamma_ * std::max(0.0, norms_[i] + norms_[j] - 2.0 * d));
    }
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return r;
  }

private:
  double dot(std::size_t i, std::size_t j) const {
    const double* a = x_.data() + i * dim_;
    const double* b = x_.data() + j * dim_;
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) s += a[k] * b[k];
    return s;
  }

  std::span<const double> x_;
  std::size_t n_, dim_;
  Kernel kernel_;
  double gamma_;
  std::vector<double> norms_;
  std::vector<std::vector<double>> rows_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::size_t capacity_ = 0;
};

}  // namespace detail

// Soft-margin dual solved by SMO with second-order working-set selection.
// x is row-major (n x dim); the penalty of row i is C * weights.of(label_i).
inline SvmModel fit_svm(std::span<const double> x, std::span<const Label> labels, const SvmParams& p,
                        const ClassWeights& weights = {}) {
  const std::size_t n = labels.size();
  if (n == 0 || x.size() % n != 0) throw DataError("svm: malformed training matrix");
  const std::size_t dim = x.size() / n;
  if (!(p.C > 0)) throw ConfigError("svm: C must be positive");

  SvmModel model;
  model.kernel = p.kernel;
  model.dim = dim;
  model.gamma = p.kernel == Kernel::rbf ? svm_gamma(p.gamma, x, dim) : 0.0;

  std::vector<double> y(n), cap(n), alpha(n, 0.0), grad(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[i] == Label::depression ? 1.0 : -1.0;
    cap[i] = p.C * weights.of(labels[i]);
  }
  detail::KernelCache cache(x, n, dim, p.kernel, model.gamma, p.cache_mb);
  constexpr double tau = 1e-12;
  auto upper = [&](std::size_t t) { return alpha[t] >= cap[t]; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  std::size_t iter = 0;
  model.converged = false;
  while (iter < p.max_iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1, j = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (i < 0) {
      model.converged = true;
      break;
    }
    const auto& ki = cache.row(static_cast<std::size_t>(i));
    const double kii = cache.diag(static_cast<std::size_t>(i));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (lower(t)) continue;
        const double diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (diff > 0) {
          const double a = kii + cache.diag(t) - 2.0 * y[i] * ki[t];
          const double obj = -(diff * diff) / (a > 0 ? a : tau);
          if (obj <= best) {
            best = obj;
            j = static_cast<std::ptrdiff_t>(t);
          }
        }
      } else {
        if (upper(t)) continue;
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0) {
          const double a = kii + cache.diag(t) + 2.0 * y[i] * ki[t];
          const double obj = -(diff * diff) / (a > 0 ? a : tau);
          if (obj <= best) {
            best = obj;
            j = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (gmax + gmax2 < p.tolerance || j < 0) {
      model.converged = true;
      break;
    }
    ++iter;

    const std::size_t a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
    const auto& ka = cache.row(a);
    const auto& kb = cache.row(b);
    const double qab = y[a] * y[b] * ka[b];
    const double old_a = alpha[a], old_b = alpha[b];
    const double ca = cap[a], cb = cap[b];
    if (y[a] != y[b]) {
      double quad = cache.diag(a) + cache.diag(b) + 2.0 * qab;
      if (quad <= 0) quad = tau;
      const double delta = (-grad[a] - grad[b]) / quad;
      const double diff = alpha[a] - alpha[b];
      alpha[a] += delta;
      alpha[b] += delta;
      if (diff > 0) {
        if (alpha[b] < 0) {
          alpha[b] = 0;
          alpha[a] = diff;
        }
      } else if (alpha[a] < 0) {
        alpha[a] = 0;
        alpha[b] = -diff;
      }
      if (diff > ca - cb) {
        if (alpha[a] > ca) {
          alpha[a] = ca;
          alpha[b] = ca - diff;
        }
      } else if (alpha[b] > cb) {
        alpha[b] = cb;
        alpha[a] = cb + diff;
      }
    } else {
      double quad = cache.diag(a) + cache.diag(b) - 2.0 * qab;
      if (quad <= 0) quad = tau;
      const double delta = (grad[a] - grad[b]) / quad;
      const double sum = alpha[a] + alpha[b];
      alpha[a] -= delta;
      alpha[b] += delta;
      if (sum > ca) {
        if (alpha[a] > ca) {
          alpha[a] = ca;
          alpha[b] = sum - ca;
        }
      } else if (alpha[b] < 0) {
        alpha[b] = 0;
        alpha[a] = sum;
      }
      if (sum > cb) {
        if (alpha[b] > cb) {
          alpha[b] = cb;
          alpha[a] = sum - cb;
        }
      } else if (alpha[a] < 0) {
        alpha[a] = 0;
        alpha[b] = sum;
      }
    }
    const double da = (alpha[a] - old_a) * y[a], db = (alpha[b] - old_b) * y[b];
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (ka[t] * da + kb[t] * db);
  }
  model.iterations = iter;

  // rho from free variables, else the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  model.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  if (p.kernel == Kernel::linear) model.w.assign(dim, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= 0) continue;
    const double c = alpha[t] * y[t];
    const auto row = x.subspan(t * dim, dim);
    model.coef.push_back(c);
    model.support.insert(model.support.end(), row.begin(), row.end());
    if (p.kernel == Kernel::linear)
      for (std::size_t k = 0; k < dim; ++k) model.w[k] += c * row[k];
  }
  return model;
}

}  // namespace moodscreen
