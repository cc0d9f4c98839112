#pragma once

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "moodscreen/corpus.hpp"
#include "moodscreen/evalreport.hpp"
#include "moodscreen/modeling/grid.hpp"
#include "moodscreen/modeling/model.hpp"
#include "moodscreen/modeling/scaler.hpp"
#include "moodscreen/pipeline/config.hpp"
#include "moodscreen/pipeline/extract.hpp"
#include "moodscreen/stats.hpp"

namespace moodscreen {

struct CorpusData {
  Manifest manifest;
  std::vector<DatasetSplit> splits;  // [train, test of train corpus?, other corpora...]
  std::map<std::pair<std::string, std::string>, SpeakerRecord> records;

  const DatasetSplit& train() const { return splits.front(); }
};

inline CorpusData load_corpora(const RunConfig& cfg) {
  CorpusData d;
  for (const auto& m : cfg.manifests) merge_manifest(d.manifest, load_manifest(cfg.resolve(m)));
  d.splits = make_splits(d.manifest.speakers, {cfg.train_corpus});
  for (const auto& r : d.manifest.speakers) d.records.emplace(std::make_pair(r.corpus_id, r.speaker_id), r);
  return d;
}

// Test splits evaluated by a task, in report order.
inline std::vector<const DatasetSplit*> test_splits(const CorpusData& d, Task task) {
  std::vector<const DatasetSplit*> out;
  for (std::size_t i = 1; i < d.splits.size(); ++i) {
    const auto& s = d.splits[i];
    if (s.corpus_id == d.train().corpus_id || cross_corpus(task)) out.push_back(&s);
  }
  if (out.empty() || out.front()->corpus_id != d.train().corpus_id)
    throw DataError("training corpus '" + d.train().corpus_id + "' has no test partition");
  return out;
}

// Segment rows of one split that have data in the table, in manifest order.
inline FeatureMatrix split_matrix(const FeatureTable& table, const CorpusData& d, const DatasetSplit& split) {
  const std::set<std::string> members(split.speaker_ids.begin(), split.speaker_ids.end());
  FeatureMatrix m;
  m.names = table.names;
  for (const auto& seg : d.manifest.segments) {
    if (seg.corpus_id != split.corpus_id || !members.count(seg.speaker_id)) continue;
    auto it = table.rows.find(seg.segment_key);
    if (it == table.rows.end()) continue;
    const auto& rec = d.records.at({seg.corpus_id, seg.speaker_id});
    m.append_row(seg.segment_key, seg.speaker_id, *rec.label, it->second);
  }
  return m;
}

inline FeatureMatrix stack(const FeatureMatrix& a, const FeatureMatrix& b) {
  FeatureMatrix out = a;
  for (std::size_t r = 0; r < b.rows(); ++r) out.append_row(b.row_keys[r], b.speakers[r], b.labels[r], b.row(r));
  return out;
}

struct PreparedSet {
  FeatureSet set = FeatureSet::praat;
  FeatureMatrix train;
  std::vector<std::pair<std::string, FeatureMatrix>> tests;  // (corpus_id, matrix)
  std::vector<double> train_medians;
  std::optional<RobustScalerParams> train_scaler;
  std::size_t excluded_segments = 0;
};

namespace detail {

inline FeatureMatrix impute_and_scale(FeatureMatrix m, const FeatureMatrix& fit_rows, const std::string& corpus,
                                      Scaling scaling, std::vector<double>* medians_out = nullptr,
                                      std::optional<RobustScalerParams>* scaler_out = nullptr) {
  const auto medians = fit_rows.column_medians();
  m.impute(medians);
  if (medians_out) *medians_out = medians;
  if (scaling == Scaling::none) return m;
  FeatureMatrix fit = fit_rows;
  fit.impute(medians);
  const auto params = fit_robust_scaler(fit, corpus);
  if (scaler_out) *scaler_out = params;
  return apply(params, std::move(m));
}

}  // namespace detail

// Raw matrices for the training split and every test split, imputed and
// scaled according to the configured policy.
inline PreparedSet prepare_set(const FeatureTable& table, const CorpusData& d, const std::vector<const DatasetSplit*>& tests,
                               Scaling scaling) {
  PreparedSet p;
  p.set = table.set;
  p.excluded_segments = table.excluded.size();
  const FeatureMatrix train_raw = split_matrix(table, d, d.train());
  if (train_raw.rows() == 0)
    throw DataError(std::string("no training rows with ") + feature_set_name(table.set) + " features");
  std::vector<std::pair<std::string, FeatureMatrix>> raw_tests;
  for (const auto* s : tests) {
    auto m = split_matrix(table, d, *s);
    if (m.rows() == 0)
      throw DataError(std::string("no ") + feature_set_name(table.set) + " rows for test corpus " + s->corpus_id);
    raw_tests.emplace_back(s->corpus_id, std::move(m));
  }
  const std::string& train_corpus = d.train().corpus_id;

  FeatureMatrix train_fit = train_raw;
  if (scaling == Scaling::per_corpus)
    for (const auto& [corpus, m] : raw_tests)
      if (corpus == train_corpus) train_fit = stack(train_fit, m);
  if (scaling == Scaling::none) {
    p.train = detail::impute_and_scale(train_raw, train_raw, train_corpus, scaling, &p.train_medians);
    for (const auto& [corpus, m] : raw_tests)
      p.tests.emplace_back(corpus, detail::impute_and_scale(m, train_raw, corpus, scaling));
    return p;
  }
  p.train = detail::impute_and_scale(train_raw, train_fit, train_corpus, scaling, &p.train_medians, &p.train_scaler);
  for (const auto& [corpus, m] : raw_tests) {
    const FeatureMatrix& fit = corpus == train_corpus ? train_fit : m;
    p.tests.emplace_back(corpus, detail::impute_and_scale(m, fit, corpus, scaling));
  }
  return p;
}

// Speaker-level feature tests on the training split.
inline std::vector<FeatureTestResult> analyze_set(const PreparedSet& p, std::size_t threads = 1) {
  return select_features(speaker_means(p.train), threads);
}

// Selected names in matrix column order; throws when nothing is selected.
inline std::vector<std::string> restrict_to_selected(PreparedSet& p, const std::vector<FeatureTestResult>& tests) {
  const auto chosen = selected_names(tests);
  const std::set<std::string> keep(chosen.begin(), chosen.end());
  std::vector<std::string> ordered;
  for (const auto& n : p.train.names)
    if (keep.count(n)) ordered.push_back(n);
  if (ordered.empty()) {
    auto best = tests;
    std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.cohen_r > b.cohen_r; });
    std::string diag;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, best.size()); ++i)
      diag += " " + best[i].feature_name + "(r=" + format_fixed(best[i].cohen_r, 3) +
              ",p=" + format_fixed(best[i].p_value, 4) + ")";
    throw DegenerateTaskError(std::string("feature selection kept no ") + feature_set_name(p.set) +
                              " features (p < 0.05 and r >= 0.30); strongest:" + diag);
  }
  const std::vector<std::string> original = p.train.names;
  p.train = p.train.select_columns(ordered);
  for (auto& [corpus, m] : p.tests) m = m.select_columns(ordered);
  std::vector<double> med;
  for (std::size_t c = 0; c < original.size(); ++c)
    if (keep.count(original[c])) med.push_back(p.train_medians[c]);
  p.train_medians = med;
  if (p.train_scaler) {
    RobustScalerParams s{p.train_scaler->corpus_id, {}, {}, {}};
    for (std::size_t c = 0; c < p.train_scaler->names.size(); ++c)
      if (keep.count(p.train_scaler->names[c])) {
        s.names.push_back(p.train_scaler->names[c]);
        s.median.push_back(p.train_scaler->median[c]);
        s.iqr.push_back(p.train_scaler->iqr[c]);
      }
    p.train_scaler = s;
  }
  return ordered;
}

inline TrainOptions train_options(const RunConfig& cfg) {
  TrainOptions o;
  o.seed = cfg.seed;
  o.oversample_unit = cfg.oversample_unit;
  o.oversample = cfg.oversample;
  o.use_class_weights = cfg.class_weights;
  o.aggregation = cfg.aggregation;
  o.threads = cfg.threads;
  return o;
}

inline std::string grid_tsv(const TrainResult& r) {
  std::string out = "rank_order\thyper_parameters\tmean_uar_pct";
  const std::size_t k = r.grid.empty() ? 0 : r.grid.front().fold_uar.size();
  for (std::size_t f = 0; f < k; ++f) out += "\tfold" + std::to_string(f) + "_uar_pct";
  out += "\tsingle_class_folds\tchosen\n";
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const auto& g = r.grid[i];
    out += std::to_string(i) + "\t" + describe(g.point) + "\t" + format_fixed(g.mean_uar, 4);
    for (double u : g.fold_uar) out += "\t" + format_fixed(u, 4);
    out += "\t" + std::to_string(g.single_class_folds) + "\t" + (i == r.best ? "1" : "0") + "\n";
  }
  return out;
}

inline EvalReport evaluate_model(const TrainedModel& model, const FeatureMatrix& test, const RunConfig& cfg) {
  const auto scores = model.score(test);
  const auto preds = aggregate_by_speaker(test.speakers, test.labels, scores, cfg.aggregation);
  EvalReport r = evaluate_predictions(preds, cfg.n_bootstrap, cfg.seed);
  r.n_features = test.cols();
  r.features = test.names;
  r.hyper_parameters = describe(model.params);
  r.cv_uar = model.cv_uar;
  return r;
}

inline std::string report_stem(const EvalReport& r, bool with_corpus) {
  std::string s = r.task_id + "_" + r.feature_set + "_" + r.model_family;
  if (with_corpus) s += "_" + r.test_corpus;
  return s;
}

struct TaskOutput {
  std::vector<EvalReport> reports;
  std::filesystem::path dir;
  nlohmann::json manifest;
};

inline TaskOutput run_task(const RunConfig& cfg, const Logger& log = stderr_logger()) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const CorpusData data = load_corpora(cfg);
  const auto tests = test_splits(data, cfg.task);
  const std::string hash = config_hash(cfg);

  std::vector<FeatureSet> sets;
  std::vector<std::string> skipped;
  for (auto s : cfg.feature_sets) {
    if (uses_selection(cfg.task) && !is_selectable_set(s)) {
      skipped.push_back(feature_set_name(s));
      continue;
    }
    sets.push_back(s);
  }
  if (sets.empty()) throw ConfigError("no feature sets left to run for task " + std::string(task_name(cfg.task)));
  for (const auto& s : skipped) log("task " + std::string(task_name(cfg.task)) + ": skipping " + s + " (not used with feature selection)");

  TaskOutput out;
  out.dir = cfg.output_path() / ("task_" + std::string(task_name(cfg.task)));
  std::filesystem::create_directories(out.dir);
  const auto extracted = extract_features(data.manifest, cfg, sets, log);

  nlohmann::json sets_json = nlohmann::json::object();
  std::vector<std::string> report_files;
  const bool with_corpus = tests.size() > 1;
  for (auto set : sets) {
    const std::string set_name = feature_set_name(set);
    PreparedSet prepared = prepare_set(extracted.tables.at(set), data, tests, cfg.scaling);
    nlohmann::json set_json;
    set_json["excluded_segments"] = prepared.excluded_segments;
    set_json["train_rows"] = prepared.train.rows();
    if (uses_selection(cfg.task)) {
      const auto results = analyze_set(prepared, cfg.threads);
      write_file(out.dir / ("feature_tests_" + set_name + ".tsv"), feature_tests_tsv(results));
      set_json["selected_features"] = restrict_to_selected(prepared, results);
    }
    const CvPlan plan = make_cv_plan(prepared.train, cfg.cv_folds, cfg.seed);
    for (const auto& a : audit_folds(plan, prepared.train))
      if (!a.shared_speakers.empty())
        throw DataError("cv fold " + std::to_string(a.fold) + " shares speaker '" + a.shared_speakers.front() +
                        "' between training and validation");
    for (auto family : cfg.model_families) {
      const auto t0 = std::chrono::steady_clock::now();
      TrainResult trained = train(HyperGrid::standard(family), prepared.train, plan, train_options(cfg));
      trained.model.feature_set = set_name;
      trained.model.impute_medians = prepared.train_medians;
      trained.model.scaler = prepared.train_scaler;
      const std::string tag = set_name + "_" + family_name(family);
      save_model(out.dir / "models" / (tag + ".json"), trained.model);
      write_file(out.dir / ("grid_" + tag + ".tsv"), grid_tsv(trained));
      for (const auto& [corpus, test] : prepared.tests) {
        EvalReport r = evaluate_model(trained.model, test, cfg);
        r.task_id = task_name(cfg.task);
        r.test_corpus = corpus;
        r.feature_set = set_name;
        r.model_family = family_name(family);
        r.config_hash = hash;
        const std::string stem = report_stem(r, with_corpus);
        write_file(out.dir / ("report_" + stem + ".tsv"), report_tsv(r));
        write_file(out.dir / ("roc_" + stem + ".csv"), roc_csv(r.roc));
        report_files.push_back("report_" + stem + ".tsv");
        out.reports.push_back(std::move(r));
      }
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log("task " + std::string(task_name(cfg.task)) + ": " + tag + " cv_uar=" + format_fixed(trained.model.cv_uar, 2) +
          " [" + describe(trained.model.params) + "] in " + format_fixed(s, 1) + " s");
    }
    sets_json[set_name] = std::move(set_json);
  }
  write_file(out.dir / "summary.txt", report_table(out.reports));

  nlohmann::json& man = out.manifest;
  man["config"] = to_json(cfg);
  man["config_hash"] = hash;
  man["seeds"] = {{"run", cfg.seed}, {"cv_plan", cfg.seed}, {"oversample_refit", cfg.seed}, {"bootstrap", cfg.seed}};
  man["task"] = task_name(cfg.task);
  man["train_corpus"] = data.train().corpus_id;
  man["train_speakers"] = data.train().speaker_ids.size();
  nlohmann::json test_json = nlohmann::json::array();
  for (const auto* t : tests) test_json.push_back({{"corpus", t->corpus_id}, {"speakers", t->speaker_ids.size()}});
  man["test_splits"] = test_json;
  man["dropped_manifest_rows"] = data.manifest.dropped_rows;
  man["feature_sets"] = sets_json;
  man["skipped_feature_sets"] = skipped;
  man["reports"] = report_files;
  write_file(out.dir / "run_manifest.json", man.dump(2) + "\n");
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  log("task " + std::string(task_name(cfg.task)) + ": " + std::to_string(out.reports.size()) + " reports in " +
      out.dir.string() + " (" + format_fixed(total, 1) + " s)");
  return out;
}

}  // namespace moodscreen
