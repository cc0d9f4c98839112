#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/parallel.hpp"
#include "moodscreen/core/rng.hpp"
#include "moodscreen/corpus.hpp"
#include "moodscreen/evalreport.hpp"
#include "moodscreen/feature_matrix.hpp"
#include "moodscreen/modeling/class_weights.hpp"
#include "moodscreen/modeling/model.hpp"

namespace moodscreen {

struct HyperGrid {
  ModelFamily family = ModelFamily::svm;
  // svm
  std::vector<double> C;
  std::vector<Kernel> kernel;
  std::vector<GammaMode> gamma;
  // rf and gbt
  std::vector<std::size_t> n_estimators;
  std::vector<Criterion> criterion;
  std::vector<std::size_t> min_samples_split;
  std::vector<bool> bootstrap;
  std::vector<double> learning_rate;
  std::vector<std::size_t> max_depth;
  std::vector<double> colsample;
  std::vector<double> subsample;

  static HyperGrid standard(ModelFamily f) {
    HyperGrid g;
    g.family = f;
    switch (f) {
      case ModelFamily::svm:
        g.C = {1e-4, 1e-3, 1e-2, 1e-1, 1, 10};
        g.kernel = {Kernel::linear, Kernel::rbf};
        g.gamma = {GammaMode::scale, GammaMode::automatic};
        break;
      case ModelFamily::gbt:
        g.n_estimators = {200, 300, 450, 500};
        g.learning_rate = {0.001, 0.01, 0.1, 0.2};
        g.max_depth = {4, 5, 6};
        g.colsample = {1, 0.3, 0.5};
        g.subsample = {0.8, 1};
        break;
      case ModelFamily::rf:
        g.n_estimators = {50, 100, 300, 500, 800, 1000};
        g.criterion = {Criterion::gini, Criterion::entropy};
        g.min_samples_split = {2, 3};
        g.bootstrap = {true, false};
        break;
    }
    return g;
  }

  // Full product in enumeration order; the first list varies slowest.
  std::vector<HyperPoint> points(std::uint64_t seed = 42) const {
    std::vector<HyperPoint> out;
    switch (family) {
      case ModelFamily::svm:
        for (double c : C)
          for (Kernel k : kernel)
            for (GammaMode gm : gamma) {
              SvmParams p;
              p.C = c;
              p.kernel = k;
              p.gamma = gm;
              out.push_back(p);
            }
        break;
      case ModelFamily::rf:
        for (auto n : n_estimators)
          for (auto cr : criterion)
            for (auto mss : min_samples_split)
              for (bool bs : bootstrap) {
                ForestParams p;
                p.n_estimators = n;
                p.criterion = cr;
                p.min_samples_split = mss;
                p.bootstrap = bs;
                p.seed = seed;
                out.push_back(p);
              }
        break;
      case ModelFamily::gbt:
        for (auto n : n_estimators)
          for (double lr : learning_rate)
            for (auto d : max_depth)
              for (double cs : colsample)
                for (double ss : subsample) {
                  BoostParams p;
                  p.n_estimators = n;
                  p.learning_rate = lr;
                  p.max_depth = d;
                  p.colsample = cs;
                  p.subsample = ss;
                  p.seed = seed;
                  out.push_back(p);
                }
        break;
    }
    if (out.empty()) throw ConfigError(std::string("empty hyper-parameter grid for ") + family_name(family));
    return out;
  }
};

struct CvPlan {
  std::size_t k = 5;
  std::uint64_t seed = 42;
  std::map<std::string, std::size_t> fold_of;

  std::vector<std::size_t> rows_in(const FeatureMatrix& m, std::size_t fold, bool validation) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto it = fold_of.find(m.speakers[r]);
      if (it == fold_of.end()) throw DataError("speaker '" + m.speakers[r] + "' is not in the CV plan");
      if ((it->second == fold) == validation) out.push_back(r);
    }
    return out;
  }
};

// Speakers are shuffled within each class and dealt round-robin, so folds are
// stratified by label and every speaker sits in exactly one fold.
inline CvPlan make_cv_plan(const FeatureMatrix& m, std::size_t k = 5, std::uint64_t seed = 42) {
  if (k < 2) throw ConfigError("cv: need at least 2 folds");
  std::map<std::string, Label> label_of;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto [it, inserted] = label_of.try_emplace(m.speakers[r], m.labels[r]);
    if (!inserted && it->second != m.labels[r])
      throw DataError("speaker '" + m.speakers[r] + "' has rows with different labels");
  }
  if (label_of.size() < k)
    throw DegenerateTaskError("cv: " + std::to_string(label_of.size()) + " speakers cannot fill " + std::to_string(k) +
                              " folds");
  std::vector<std::string> pos, neg;
  for (const auto& [spk, l] : label_of) (l == Label::depression ? pos : neg).push_back(spk);
  Rng rng(seed);
  rng.shuffle(pos.begin(), pos.end());
  rng.shuffle(neg.begin(), neg.end());
  CvPlan plan;
  plan.k = k;
  plan.seed = seed;
  std::size_t slot = 0;
  for (const auto* group : {&pos, &neg})
    for (const auto& spk : *group) plan.fold_of[spk] = slot++ % k;
  return plan;
}

struct FoldAudit {
  std::size_t fold = 0;
  std::vector<std::string> shared_speakers;
};

// Speakers present in both the training and validation rows of a fold.
inline FoldAudit audit_fold(const FeatureMatrix& m, std::size_t fold, std::span<const std::size_t> train_rows,
                            std::span<const std::size_t> validation_rows) {
  std::set<std::string> train, val;
  for (auto r : train_rows) train.insert(m.speakers[r]);
  for (auto r : validation_rows) val.insert(m.speakers[r]);
  FoldAudit a{fold, {}};
  std::set_intersection(train.begin(), train.end(), val.begin(), val.end(), std::back_inserter(a.shared_speakers));
  return a;
}

inline std::vector<FoldAudit> audit_folds(const CvPlan& plan, const FeatureMatrix& m) {
  std::vector<FoldAudit> out;
  for (std::size_t f = 0; f < plan.k; ++f)
    out.push_back(audit_fold(m, f, plan.rows_in(m, f, false), plan.rows_in(m, f, true)));
  return out;
}

struct TrainOptions {
  std::uint64_t seed = 42;
  OversampleUnit oversample_unit = OversampleUnit::speaker;
  bool oversample = true;
  bool use_class_weights = true;
  AggregationRule aggregation = AggregationRule::mean_score;
  std::size_t threads = 1;
};

struct GridScore {
  HyperPoint point;
  std::vector<double> fold_uar;
  double mean_uar = 0.0;
  std::size_t single_class_folds = 0;
};

struct TrainResult {
  TrainedModel model;
  std::vector<GridScore> grid;
  std::size_t best = 0;
};

namespace detail {

inline std::size_t ensemble_size(const HyperPoint& p) {
  if (auto* f = std::get_if<ForestParams>(&p)) return f->n_estimators;
  if (auto* b = std::get_if<BoostParams>(&p)) return b->n_estimators;
  return 0;
}

inline HyperPoint with_ensemble_size(HyperPoint p, std::size_t n) {
  if (auto* f = std::get_if<ForestParams>(&p)) f->n_estimators = n;
  if (auto* b = std::get_if<BoostParams>(&p)) b->n_estimators = n;
  return p;
}

// Points that differ only in what the fit ignores share one key; linear
// kernels ignore gamma and ensembles share every prefix of the largest fit.
inline std::string fit_key(const HyperPoint& p) {
  HyperPoint q = with_ensemble_size(p, 0);
  if (auto* s = std::get_if<SvmParams>(&q); s && s->kernel == Kernel::linear) s->gamma = GammaMode::scale;
  return describe(q);
}

struct PreparedTrain {
  FeatureMatrix matrix;
  ClassWeights weights;
};

inline PreparedTrain prepare_training(const FeatureMatrix& m, const TrainOptions& o, std::uint64_t oversample_seed) {
  PreparedTrain p;
  p.matrix = o.oversample ? oversample(m, {oversample_seed, o.oversample_unit}) : m;
  p.weights = o.use_class_weights ? class_weights(p.matrix.labels) : ClassWeights{};
  return p;
}

}  // namespace detail

// Grid search under speaker-grouped CV, then a refit of the best point on all
// training rows. Oversampling happens inside each training fold only.
inline TrainResult train(const HyperGrid& grid, const FeatureMatrix& m, const CvPlan& plan,
                         const TrainOptions& o = {}) {
  m.require_complete("train");
  const auto points = grid.points(o.seed);

  // group points that can share one fit
  std::vector<std::string> keys;
  std::map<std::string, std::size_t> group_of_key;
  std::vector<std::size_t> group_of(points.size());
  std::vector<std::size_t> group_size;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto key = detail::fit_key(points[i]);
    auto [it, inserted] = group_of_key.try_emplace(key, keys.size());
    if (inserted) {
      keys.push_back(key);
      group_size.push_back(0);
    }
    group_of[i] = it->second;
    group_size[it->second] = std::max(group_size[it->second], detail::ensemble_size(points[i]));
  }
  std::vector<HyperPoint> group_point(keys.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    if (detail::ensemble_size(points[i]) == group_size[group_of[i]] || detail::ensemble_size(points[i]) == 0)
      group_point[group_of[i]] = points[i];

  // cache fold data once
  struct Fold {
    detail::PreparedTrain train;
    FeatureMatrix validation;
  };
  std::vector<Fold> folds(plan.k);
  for (std::size_t f = 0; f < plan.k; ++f) {
    const auto tr = plan.rows_in(m, f, false);
    const auto va = plan.rows_in(m, f, true);
    if (va.empty()) throw DegenerateTaskError("cv fold " + std::to_string(f) + " has no validation speakers");
    folds[f].train = detail::prepare_training(m.select_rows(tr), o, mix_seed(o.seed, 1000 + f));
    folds[f].validation = m.select_rows(va);
  }

  // fold_uar[point][fold], filled by (group, fold) tasks
  std::vector<std::vector<double>> fold_uar(points.size(), std::vector<double>(plan.k, 0.0));
  std::vector<std::vector<char>> single(points.size(), std::vector<char>(plan.k, 0));
  parallel_for(keys.size() * plan.k, o.threads, [&](std::size_t task) {
    const std::size_t g = task / plan.k, f = task % plan.k;
    const auto& fold = folds[f];
    const auto fitted = fit_point(group_point[g], fold.train.matrix.data, fold.train.matrix.labels, fold.train.weights);
    const auto& val = fold.validation;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (group_of[i] != g) continue;
      std::vector<double> scores(val.rows());
      for (std::size_t r = 0; r < val.rows(); ++r) scores[r] = score_row(fitted, val.row(r), detail::ensemble_size(points[i]));
      const auto preds = aggregate_by_speaker(val.speakers, val.labels, scores, o.aggregation);
      bool one = false;
      fold_uar[i][f] = uar_present(preds, &one);
      single[i][f] = one;
    }
  });

  TrainResult result;
  for (std::size_t i = 0; i < points.size(); ++i) {
    GridScore s;
    s.point = points[i];
    s.fold_uar = fold_uar[i];
    for (double u : s.fold_uar) s.mean_uar += u;
    s.mean_uar /= static_cast<double>(plan.k);
    s.single_class_folds = static_cast<std::size_t>(std::count(single[i].begin(), single[i].end(), 1));
    result.grid.push_back(std::move(s));
  }
  for (std::size_t i = 1; i < result.grid.size(); ++i)
    if (result.grid[i].mean_uar > result.grid[result.best].mean_uar) result.best = i;

  const auto full = detail::prepare_training(m, o, o.seed);
  auto& model = result.model;
  model.params = points[result.best];
  model.fitted = fit_point(model.params, full.matrix.data, full.matrix.labels, full.weights);
  model.class_weights = full.weights;
  model.feature_names = m.names;
  model.cv_uar = result.grid[result.best].mean_uar;
  return result;
}

}  // namespace moodscreen
