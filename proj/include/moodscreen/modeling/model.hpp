#pragma once

#include <json.hpp>

#include <string>
#include <optional>
#include <type_traits>
#include <variant>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/text_io.hpp"
#include "moodscreen/feature_matrix.hpp"
#include "moodscreen/modeling/boosting.hpp"
#include "moodscreen/modeling/class_weights.hpp"
#include "moodscreen/modeling/forest.hpp"
#include "moodscreen/modeling/scaler.hpp"
#include "moodscreen/modeling/svm.hpp"

namespace moodscreen {

enum class ModelFamily { svm, rf, gbt };

inline const char* family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::svm: return "svm";
    case ModelFamily::rf: return "rf";
    case ModelFamily::gbt: return "gbt";
  }
  return "?";
}

inline ModelFamily parse_family(const std::string& s) {
  if (s == "svm") return ModelFamily::svm;
  if (s == "rf") return ModelFamily::rf;
  if (s == "gbt" || s == "xgb") return ModelFamily::gbt;
  throw ConfigError("unknown model family '" + s + "'");
}

using HyperPoint = std::variant<SvmParams, ForestParams, BoostParams>;
using FittedModel = std::variant<SvmModel, ForestModel, BoostModel>;

inline ModelFamily family_of(const HyperPoint& p) { return static_cast<ModelFamily>(p.index()); }

inline std::string describe(const HyperPoint& p) {
  auto num = [](double v) { return format_double(v); };
  if (auto* s = std::get_if<SvmParams>(&p))
    return "C=" + num(s->C) + ";kernel=" + kernel_name(s->kernel) + ";gamma=" + gamma_name(s->gamma);
  if (auto* f = std::get_if<ForestParams>(&p))
    return "n_estimators=" + std::to_string(f->n_estimators) + ";criterion=" + criterion_name(f->criterion) +
           ";min_samples_split=" + std::to_string(f->min_samples_split) +
           ";bootstrap=" + (f->bootstrap ? "true" : "false");
  const auto& b = std::get<BoostParams>(p);
  return "n_estimators=" + std::to_string(b.n_estimators) + ";learning_rate=" + num(b.learning_rate) +
         ";max_depth=" + std::to_string(b.max_depth) + ";colsample=" + num(b.colsample) +
         ";subsample=" + num(b.subsample);
}

inline FittedModel fit_point(const HyperPoint& p, std::span<const double> x, std::span<const Label> labels,
                             const ClassWeights& w) {
  if (auto* s = std::get_if<SvmParams>(&p)) return fit_svm(x, labels, *s, w);
  if (auto* f = std::get_if<ForestParams>(&p)) return fit_forest(x, labels, *f, w);
  return fit_boosting(x, labels, std::get<BoostParams>(p), w);
}

// n_trees limits ensembles to a prefix; ignored for the svm.
inline double score_row(const FittedModel& m, std::span<const double> x, std::size_t n_trees = 0) {
  return std::visit(
      [&](const auto& model) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(model)>, SvmModel>) {
          (void)n_trees;
          return model.score(x);
        } else {
          return model.score(x, n_trees);
        }
      },
      m);
}

inline constexpr int kModelFormatVersion = 1;

struct TrainedModel {
  HyperPoint params;
  FittedModel fitted;
  ClassWeights class_weights;
  std::string feature_set;
  std::vector<std::string> feature_names;
  std::vector<double> impute_medians;   // training medians, pre-scaling
  std::optional<RobustScalerParams> scaler;  // training corpus scaler, for provenance
  double cv_uar = 0.0;

  ModelFamily family() const { return family_of(params); }

  std::vector<double> score(const FeatureMatrix& m) const {
    if (m.names != feature_names)
      throw DataError("model feature schema does not match matrix (" + std::to_string(feature_names.size()) +
                      " vs " + std::to_string(m.cols()) + " columns)");
    m.require_complete("score");
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = score_row(fitted, m.row(r));
    return out;
  }
};

namespace detail {

using nlohmann::json;

inline json tree_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) nodes.push_back({n.feature, n.left, n.right, n.bin, n.threshold, n.value});
  return nodes;
}

inline Tree tree_from(const json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<std::int32_t>();
    node.left = n.at(1).get<std::int32_t>();
    node.right = n.at(2).get<std::int32_t>();
    node.bin = n.at(3).get<std::uint16_t>();
    node.threshold = n.at(4).get<double>();
    node.value = n.at(5).get<double>();
    t.nodes.push_back(node);
  }
  const auto size = static_cast<std::int32_t>(t.nodes.size());
  for (const auto& n : t.nodes)
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))
      throw DataError("model file: tree node index out of range");
  return t;
}

inline json params_json(const HyperPoint& p) {
  json j;
  j["family"] = family_name(family_of(p));
  if (auto* s = std::get_if<SvmParams>(&p)) {
    j["C"] = s->C;
    j["kernel"] = kernel_name(s->kernel);
    j["gamma"] = gamma_name(s->gamma);
    j["tolerance"] = s->tolerance;
    j["max_iter"] = s->max_iter;
  } else if (auto* f = std::get_if<ForestParams>(&p)) {
    j["n_estimators"] = f->n_estimators;
    j["criterion"] = criterion_name(f->criterion);
    j["min_samples_split"] = f->min_samples_split;
    j["bootstrap"] = f->bootstrap;
    j["max_features"] = f->max_features;
    j["seed"] = f->seed;
  } else {
    const auto& b = std::get<BoostParams>(p);
    j["n_estimators"] = b.n_estimators;
    j["learning_rate"] = b.learning_rate;
    j["max_depth"] = b.max_depth;
    j["colsample"] = b.colsample;
    j["subsample"] = b.subsample;
    j["lambda"] = b.lambda;
    j["min_child_weight"] = b.min_child_weight;
    j["seed"] = b.seed;
  }
  return j;
}

inline HyperPoint params_from(const json& j) {
  const auto fam = parse_family(j.at("family").get<std::string>());
  if (fam == ModelFamily::svm) {
    SvmParams s;
    s.C = j.at("C").get<double>();
    s.kernel = j.at("kernel").get<std::string>() == "linear" ? Kernel::linear : Kernel::rbf;
    s.gamma = j.at("gamma").get<std::string>() == "auto" ? GammaMode::automatic : GammaMode::scale;
    s.tolerance = j.at("tolerance").get<double>();
    s.max_iter = j.at("max_iter").get<std::size_t>();
    return s;
  }
  if (fam == ModelFamily::rf) {
    ForestParams f;
    f.n_estimators = j.at("n_estimators").get<std::size_t>();
    f.criterion = j.at("criterion").get<std::string>() == "entropy" ? Criterion::entropy : Criterion::gini;
    f.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    f.bootstrap = j.at("bootstrap").get<bool>();
    f.max_features = j.at("max_features").get<std::size_t>();
    f.seed = j.at("seed").get<std::uint64_t>();
    return f;
  }
  BoostParams b;
  b.n_estimators = j.at("n_estimators").get<std::size_t>();
  b.learning_rate = j.at("learning_rate").get<double>();
  b.max_depth = j.at("max_depth").get<std::size_t>();
  b.colsample = j.at("colsample").get<double>();
  b.subsample = j.at("subsample").get<double>();
  b.lambda = j.at("lambda").get<double>();
  b.min_child_weight = j.at("min_child_weight").get<double>();
  b.seed = j.at("seed").get<std::uint64_t>();
  return b;
}

}  // namespace detail

inline std::string serialize_model(const TrainedModel& m) {
  using nlohmann::json;
  json j;
  j["format"] = "moodscreen-model";
  j["version"] = kModelFormatVersion;
  j["params"] = detail::params_json(m.params);
  j["class_weights"] = {{"depression", m.class_weights.depression}, {"no_depression", m.class_weights.no_depression}};
  j["feature_set"] = m.feature_set;
  j["feature_names"] = m.feature_names;
  j["impute_medians"] = m.impute_medians;
  j["cv_uar"] = m.cv_uar;
  if (m.scaler)
    j["scaler"] = {{"corpus_id", m.scaler->corpus_id},
                   {"names", m.scaler->names},
                   {"median", m.scaler->median},
                   {"iqr", m.scaler->iqr}};
  json fit;
  if (auto* s = std::get_if<SvmModel>(&m.fitted)) {
    fit = {{"kernel", kernel_name(s->kernel)}, {"gamma", s->gamma}, {"dim", s->dim}, {"rho", s->rho},
           {"coef", s->coef}, {"support", s->support}, {"w", s->w}};
  } else if (auto* f = std::get_if<ForestModel>(&m.fitted)) {
    fit["dim"] = f->dim;
    fit["trees"] = json::array();
    for (const auto& t : f->trees) fit["trees"].push_back(detail::tree_json(t));
  } else {
    const auto& b = std::get<BoostModel>(m.fitted);
    fit["dim"] = b.dim;
    fit["base_margin"] = b.base_margin;
    fit["trees"] = json::array();
    for (const auto& t : b.trees) fit["trees"].push_back(detail::tree_json(t));
  }
  j["fitted"] = std::move(fit);
  return j.dump() + "\n";
}

inline TrainedModel deserialize_model(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "moodscreen-model") throw DataError("not a model file");
  if (j.value("version", 0) != kModelFormatVersion)
    throw DataError("unsupported model format version " + std::to_string(j.value("version", 0)));
  try {
    TrainedModel m;
    m.params = detail::params_from(j.at("params"));
    m.class_weights.depression = j.at("class_weights").at("depression").get<double>();
    m.class_weights.no_depression = j.at("class_weights").at("no_depression").get<double>();
    m.feature_set = j.at("feature_set").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.impute_medians = j.at("impute_medians").get<std::vector<double>>();
    m.cv_uar = j.at("cv_uar").get<double>();
    if (j.contains("scaler")) {
      const auto& s = j["scaler"];
      m.scaler = RobustScalerParams{s.at("corpus_id").get<std::string>(), s.at("names").get<std::vector<std::string>>(),
                                    s.at("median").get<std::vector<double>>(), s.at("iqr").get<std::vector<double>>()};
    }
    const auto& fit = j.at("fitted");
    const std::size_t dim = fit.at("dim").get<std::size_t>();
    if (dim != m.feature_names.size()) throw DataError("model file: fitted dimension does not match feature names");
    switch (m.family()) {
      case ModelFamily::svm: {
        SvmModel s;
        s.kernel = fit.at("kernel").get<std::string>() == "linear" ? Kernel::linear : Kernel::rbf;
        s.gamma = fit.at("gamma").get<double>();
        s.dim = dim;
        s.rho = fit.at("rho").get<double>();
        s.coef = fit.at("coef").get<std::vector<double>>();
        s.support = fit.at("support").get<std::vector<double>>();
        s.w = fit.at("w").get<std::vector<double>>();
        if (s.support.size() != s.coef.size() * dim) throw DataError("model file: support vector shape mismatch");
        m.fitted = std::move(s);
        break;
      }
      case ModelFamily::rf: {
        ForestModel f;
        f.dim = dim;
        for (const auto& t : fit.at("trees")) f.trees.push_back(detail::tree_from(t));
        m.fitted = std::move(f);
        break;
      }
      case ModelFamily::gbt: {
        BoostModel b;
        b.dim = dim;
        b.base_margin = fit.at("base_margin").get<double>();
        for (const auto& t : fit.at("trees")) b.trees.push_back(detail::tree_from(t));
        m.fitted = std::move(b);
        break;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is malformed: ") + e.what());
  }
}

inline void save_model(const std::string& path, const TrainedModel& m) { write_file(path, serialize_model(m)); }
inline TrainedModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

}  // namespace moodscreen
