#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/quantile.hpp"
#include "moodscreen/core/rng.hpp"
#include "moodscreen/core/text_io.hpp"
#include "moodscreen/feature_matrix.hpp"

namespace moodscreen {

enum class AggregationRule { mean_score, majority_vote };

inline const char* aggregation_name(AggregationRule r) {
  return r == AggregationRule::mean_score ? "mean_score" : "majority_vote";
}
inline AggregationRule parse_aggregation(const std::string& s) {
  if (s == "mean_score") return AggregationRule::mean_score;
  if (s == "majority_vote") return AggregationRule::majority_vote;
  throw ConfigError("unknown aggregation rule '" + s + "'");
}

inline constexpr double kDecisionThreshold = 0.5;

struct SpeakerPrediction {
  std::string speaker_id;
  double aggregated_score = 0.0;
  Label predicted = Label::no_depression;
  Label truth = Label::no_depression;
  std::size_t n_segments = 0;
};

struct Aggregate {
  double score = 0.0;
  Label predicted = Label::no_depression;
};

// mean_score: mean of segment scores. majority_vote: share of segments at or
// above 0.5. Either way depression is predicted when the result is >= 0.5.
inline Aggregate aggregate_speaker(std::span<const double> scores, AggregationRule rule = AggregationRule::mean_score) {
  if (scores.empty()) throw ValidationError("aggregate_speaker: no segment scores");
  double acc = 0.0;
  for (double s : scores) acc += rule == AggregationRule::mean_score ? s : (s >= kDecisionThreshold ? 1.0 : 0.0);
  Aggregate a;
  a.score = acc / static_cast<double>(scores.size());
  a.predicted = a.score >= kDecisionThreshold ? Label::depression : Label::no_depression;
  return a;
}

// Groups segment scores by speaker, in order of first appearance.
inline std::vector<SpeakerPrediction> aggregate_by_speaker(std::span<const std::string> speakers,
                                                           std::span<const Label> truths,
                                                           std::span<const double> scores,
                                                           AggregationRule rule = AggregationRule::mean_score) {
  if (speakers.size() != scores.size() || truths.size() != scores.size())
    throw DataError("aggregate_by_speaker: length mismatch");
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> per;
  std::map<std::string, Label> truth_of;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto [it, inserted] = per.try_emplace(speakers[i]);
    if (inserted) {
      order.push_back(speakers[i]);
      truth_of[speakers[i]] = truths[i];
    }
    it->second.push_back(scores[i]);
  }
  std::vector<SpeakerPrediction> out;
  for (const auto& spk : order) {
    const auto& s = per[spk];
    const auto agg = aggregate_speaker(s, rule);
    out.push_back({spk, agg.score, agg.predicted, truth_of[spk], s.size()});
  }
  return out;
}

struct Confusion {
  double tp = 0, fn = 0, fp = 0, tn = 0;  // depression is the positive class
};

inline Confusion confusion(std::span<const SpeakerPrediction> preds) {
  Confusion c;
  for (const auto& p : preds) {
    const bool t = p.truth == Label::depression, y = p.predicted == Label::depression;
    c.tp += t && y;
    c.fn += t && !y;
    c.fp += !t && y;
    c.tn += !t && !y;
  }
  return c;
}

// Unweighted mean of per-class recalls, in percent.
inline double uar(std::span<const SpeakerPrediction> preds) {
  const auto c = confusion(preds);
  if (c.tp + c.fn == 0) throw DegenerateTaskError("uar: no speakers of class depression in the truth");
  if (c.tn + c.fp == 0) throw DegenerateTaskError("uar: no speakers of class no_depression in the truth");
  return 50.0 * (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp));
}

// UAR over whichever classes are present; `single_class` flags degenerate folds.
inline double uar_present(std::span<const SpeakerPrediction> preds, bool* single_class = nullptr) {
  const auto c = confusion(preds);
  std::vector<double> recalls;
  if (c.tp + c.fn > 0) recalls.push_back(c.tp / (c.tp + c.fn));
  if (c.tn + c.fp > 0) recalls.push_back(c.tn / (c.tn + c.fp));
  if (single_class) *single_class = recalls.size() < 2;
  if (recalls.empty()) return 0.0;
  return 100.0 * std::accumulate(recalls.begin(), recalls.end(), 0.0) / static_cast<double>(recalls.size());
}

struct PrfResult {
  double precision_dep = 0, precision_no_dep = 0;
  double recall_dep = 0, recall_no_dep = 0;
  double f1_dep = 0, f1_no_dep = 0, f1_macro = 0;
  bool precision_dep_undefined = false, precision_no_dep_undefined = false;
};

// Percentages. Precision with no predictions of a class is reported as 0 and flagged.
inline PrfResult prf(std::span<const SpeakerPrediction> preds) {
  const auto c = confusion(preds);
  PrfResult r;
  auto div = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  r.precision_dep_undefined = c.tp + c.fp == 0;
  r.precision_no_dep_undefined = c.tn + c.fn == 0;
  const double pd = div(c.tp, c.tp + c.fp), pn = div(c.tn, c.tn + c.fn);
  const double rd = div(c.tp, c.tp + c.fn), rn = div(c.tn, c.tn + c.fp);
  const double fd = div(2 * pd * rd, pd + rd), fn = div(2 * pn * rn, pn + rn);
  r.precision_dep = 100 * pd;
  r.precision_no_dep = 100 * pn;
  r.recall_dep = 100 * rd;
  r.recall_no_dep = 100 * rn;
  r.f1_dep = 100 * fd;
  r.f1_no_dep = 100 * fn;
  r.f1_macro = 50 * (fd + fn);
  return r;
}

struct RocPoint {
  double fpr = 0, tpr = 0;
};

struct RocResult {
  std::vector<RocPoint> points;
  double auc = 0.5;
};

// Thresholds at every unique score (descending); trapezoidal area, which
// gives tied positive/negative pairs half credit.
inline RocResult roc_auc(std::span<const double> scores, std::span<const Label> truths) {
  if (scores.size() != truths.size()) throw DataError("roc_auc: length mismatch");
  double n_pos = 0, n_neg = 0;
  for (Label t : truths) (t == Label::depression ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw DegenerateTaskError("roc_auc: both classes must be present");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RocResult r;
  r.points.push_back({0.0, 0.0});
  double tp = 0, fp = 0, area = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    const double tp0 = tp, fp0 = fp;
    while (i < order.size() && scores[order[i]] == s) {
      (truths[order[i]] == Label::depression ? tp : fp) += 1;
      ++i;
    }
    area += (fp - fp0) * (tp + tp0) / 2.0;
    r.points.push_back({fp / n_neg, tp / n_pos});
  }
  r.auc = area / (n_pos * n_neg);
  return r;
}

inline RocResult roc_auc(std::span<const SpeakerPrediction> preds) {
  std::vector<double> s;
  std::vector<Label> t;
  for (const auto& p : preds) {
    s.push_back(p.aggregated_score);
    t.push_back(p.truth);
  }
  return roc_auc(s, t);
}

struct ConfidenceInterval {
  double low = 0, high = 0;
  std::size_t iterations = 0;
  std::size_t skipped = 0;  // resamples with a single true class
};

using SpeakerMetric = std::function<double(std::span<const SpeakerPrediction>)>;

// Percentile bootstrap over speakers. Iteration i draws from its own stream
// derived from (seed, i), so the result does not depend on evaluation order.
inline ConfidenceInterval bootstrap_ci(std::span<const SpeakerPrediction> preds, const SpeakerMetric& metric,
                                       std::size_t n_iter = 1000, std::uint64_t seed = 42) {
  if (preds.size() < 2) throw DegenerateTaskError("bootstrap_ci: need at least two speakers");
  ConfidenceInterval ci;
  ci.iterations = n_iter;
  std::vector<double> values;
  values.reserve(n_iter);
  std::vector<SpeakerPrediction> sample(preds.size());
  for (std::size_t it = 0; it < n_iter; ++it) {
    Rng rng = Rng::derive(seed, it);
    bool pos = false, neg = false;
    for (auto& s : sample) {
      s = preds[rng.index(preds.size())];
      (s.truth == Label::depression ? pos : neg) = true;
    }
    if (!pos || !neg) {
      ++ci.skipped;
      continue;
    }
    values.push_back(metric(sample));
  }
  if (values.empty()) throw DegenerateTaskError("bootstrap_ci: every resample was single-class");
  std::sort(values.begin(), values.end());
  ci.low = percentile_sorted(values, 2.5);
  ci.high = percentile_sorted(values, 97.5);
  return ci;
}

struct EvalReport {
  std::string task_id;
  std::string test_corpus;
  std::string feature_set;
  std::string model_family;
  double uar_pct = 0, ci_low = 0, ci_high = 0;
  PrfResult prf;
  RocResult roc;
  std::size_t n_speakers = 0, n_features = 0;
  std::size_t n_bootstrap = 1000, bootstrap_skipped = 0;
  std::uint64_t seed = 42;
  std::string config_hash;
  std::string hyper_parameters;
  double cv_uar = 0;
  std::vector<std::string> features;
};

// Builds the full report for one set of speaker predictions.
inline EvalReport evaluate_predictions(const std::vector<SpeakerPrediction>& preds, std::size_t n_bootstrap,
                                       std::uint64_t seed) {
  EvalReport r;
  r.uar_pct = uar(preds);
  r.prf = prf(preds);
  r.roc = roc_auc(preds);
  const auto ci = bootstrap_ci(preds, [](std::span<const SpeakerPrediction> p) { return uar(p); }, n_bootstrap, seed);
  // the point estimate always lies inside the reported interval
  r.ci_low = std::min(ci.low, r.uar_pct);
  r.ci_high = std::max(ci.high, r.uar_pct);
  r.n_bootstrap = n_bootstrap;
  r.bootstrap_skipped = ci.skipped;
  r.seed = seed;
  r.n_speakers = preds.size();
  return r;
}

inline std::string report_header() {
  return "task\ttest_corpus\tfeature_set\tmodel\tuar_pct\tuar_ci_low\tuar_ci_high\tf1_pct\t"
         "precision_dep_pct\tprecision_no_dep_pct\trecall_dep_pct\trecall_no_dep_pct\tauc\t"
         "n_speakers\tn_features\tn_bootstrap\tbootstrap_skipped\tcv_uar_pct\tseed\tconfig_hash\thyper_parameters\n";
}

inline std::string report_row(const EvalReport& r) {
  auto f2 = [](double v) { return format_fixed(v, 2); };
  return r.task_id + "\t" + r.test_corpus + "\t" + r.feature_set + "\t" + r.model_family + "\t" + f2(r.uar_pct) +
         "\t" + f2(r.ci_low) + "\t" + f2(r.ci_high) + "\t" + f2(r.prf.f1_macro) + "\t" + f2(r.prf.precision_dep) +
         "\t" + f2(r.prf.precision_no_dep) + "\t" + f2(r.prf.recall_dep) + "\t" + f2(r.prf.recall_no_dep) + "\t" +
         format_fixed(r.roc.auc, 4) + "\t" + std::to_string(r.n_speakers) + "\t" + std::to_string(r.n_features) +
         "\t" + std::to_string(r.n_bootstrap) + "\t" + std::to_string(r.bootstrap_skipped) + "\t" + f2(r.cv_uar) +
         "\t" + std::to_string(r.seed) + "\t" + r.config_hash + "\t" + r.hyper_parameters + "\n";
}

inline std::string report_tsv(const EvalReport& r) { return report_header() + report_row(r); }

inline std::string roc_csv(const RocResult& roc) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : roc.points) out += format_fixed(p.fpr, 6) + "," + format_fixed(p.tpr, 6) + "\n";
  return out;
}

// Human-readable aligned summary of many reports.
inline std::string report_table(const std::vector<EvalReport>& reports) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-5s %-12s %-11s %-6s %-16s %6s %7s %7s %7s %7s %6s\n", "Task", "Corpus",
                "Feature", "Model", "UAR[%](CI)", "F1[%]", "P.Dep", "P.NoDep", "R.Dep", "R.NoDep", "AUC");
  out += line;
  for (const auto& r : reports) {
    char uar_buf[48];
    std::snprintf(uar_buf, sizeof(uar_buf), "%.0f(%.0f-%.0f)", r.uar_pct, r.ci_low, r.ci_high);
    std::snprintf(line, sizeof(line), "%-5s %-12s %-11s %-6s %-16s %6.0f %7.0f %7.0f %7.0f %7.0f %6.3f\n",
                  r.task_id.c_str(), r.test_corpus.c_str(), r.feature_set.c_str(), r.model_family.c_str(), uar_buf,
                  r.prf.f1_macro, r.prf.precision_dep, r.prf.precision_no_dep, r.prf.recall_dep, r.prf.recall_no_dep,
                  r.roc.auc);
    out += line;
  }
  return out;
}

}  // namespace moodscreen
