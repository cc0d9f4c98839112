#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "moodscreen/pipeline/config.hpp"
#include "moodscreen/pipeline/extract.hpp"
#include "moodscreen/pipeline/synth.hpp"
#include "moodscreen/pipeline/task.hpp"

#ifndef MOODSCREEN_DATA_DIR
#define MOODSCREEN_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace moodscreen;

namespace {

struct Overrides {
  std::string config;
  std::string task, scaling, aggregation, output_dir;
  std::vector<std::string> feature_sets, models;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads, n_bootstrap;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "run config (JSON)")->required();
    app->add_option("--task", task, "A, B, C_A or C_B");
    app->add_option("--feature-sets", feature_sets, "feature sets to use")->delimiter(',');
    app->add_option("--models", models, "model families (svm, rf, gbt)")->delimiter(',');
    app->add_option("--seed", seed, "run seed");
    app->add_option("--threads", threads, "worker threads (0 = all cores)");
    app->add_option("--n-bootstrap", n_bootstrap, "bootstrap iterations");
    app->add_option("--scaling", scaling, "per_corpus, train_only or none");
    app->add_option("--aggregation", aggregation, "mean_score or majority_vote");
    app->add_option("-o,--output-dir", output_dir, "output directory");
  }

  RunConfig load() const {
    RunConfig c = load_config(config);
    if (!task.empty()) c.task = parse_task(task);
    if (!feature_sets.empty()) {
      c.feature_sets.clear();
      for (const auto& s : feature_sets) c.feature_sets.push_back(parse_feature_set(s));
    }
    if (!models.empty()) {
      c.model_families.clear();
      for (const auto& m : models) c.model_families.push_back(parse_family(m));
    }
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (n_bootstrap) c.n_bootstrap = *n_bootstrap;
    if (!scaling.empty()) c.scaling = parse_scaling(scaling);
    if (!aggregation.empty()) c.aggregation = parse_aggregation(aggregation);
    if (!output_dir.empty()) c.output_dir = fs::absolute(output_dir).string();
    c.validate();
    return c;
  }
};

int cmd_synth(const std::string& out, const std::string& preset, const std::string& spec_path,
              std::optional<std::uint64_t> seed, std::optional<std::size_t> segments, bool no_audio,
              bool no_transcripts, bool embeddings, std::optional<double> valence_r, const std::string& lexicon_dir) {
  nlohmann::json j = nlohmann::json::object();
  if (!spec_path.empty()) {
    try {
      j = nlohmann::json::parse(read_file(spec_path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("synth spec is not valid JSON: " + std::string(e.what()));
    }
  }
  if (!preset.empty()) j["preset"] = preset;
  if (seed) j["seed"] = *seed;
  if (segments) j["segments_per_speaker"] = *segments;
  if (no_audio) j["audio"] = false;
  if (no_transcripts) j["transcripts"] = false;
  if (embeddings) j["embeddings"] = true;
  SynthSpec spec = synth_spec_from_json(j);
  if (valence_r) {
    spec.effects.valence_shift = 0.0;
    spec.effects.valence_r = *valence_r;
  }
  const auto result = synth_corpus(spec, out, lexicon_dir);
  std::cout << "wrote " << result.manifests.size() << " manifests, config " << result.config.string()
            << ", valence shift " << format_fixed(result.ground_truth["valence_shift_sd"].get<double>(), 3)
            << " SD\n";
  return 0;
}

int cmd_extract(const RunConfig& cfg, bool segment_manifest) {
  const fs::path out = cfg.output_path();
  if (segment_manifest) {
    for (const auto& m : cfg.manifests) {
      const fs::path src = cfg.resolve(m);
      const fs::path dst = out / ("segment_manifest_" + src.filename().string());
      write_file(dst, moodscreen::segment_manifest(src, cfg));
      std::cout << "wrote " << dst.string() << "\n";
    }
    return 0;
  }
  const CorpusData data = load_corpora(cfg);
  const auto result = extract_features(data.manifest, cfg, cfg.feature_sets);
  if (!result.vad.empty()) {
    write_file(out / "segments.tsv", vad_segments_tsv(result.vad));
    std::cout << "wrote " << (out / "segments.tsv").string() << "\n";
  }
  for (const auto& [set, table] : result.tables)
    std::cout << feature_set_name(set) << "\t" << table.rows.size() << " segments\t" << table.excluded.size()
              << " excluded\t" << (table.cache_hit ? "cached" : (is_sidecar_set(set) ? "ingested" : "computed"))
              << "\n";
  return 0;
}

int cmd_analyze(const RunConfig& cfg) {
  const CorpusData data = load_corpora(cfg);
  std::vector<FeatureSet> sets;
  for (auto s : cfg.feature_sets)
    if (is_selectable_set(s)) sets.push_back(s);
  const auto tables = extract_features(data.manifest, cfg, sets);
  const auto tests = test_splits(data, cfg.task);
  const fs::path out = cfg.output_path() / "analysis";
  for (auto set : sets) {
    const auto prepared = prepare_set(tables.tables.at(set), data, tests, cfg.scaling);
    const auto results = analyze_set(prepared, cfg.threads);
    write_file(out / ("feature_tests_" + std::string(feature_set_name(set)) + ".tsv"), feature_tests_tsv(results));
    const auto chosen = selected_names(results);
    std::cout << feature_set_name(set) << ": " << chosen.size() << " of " << results.size() << " selected";
    for (const auto& n : chosen) std::cout << " " << n;
    std::cout << "\n";
  }
  return 0;
}

PreparedSet prepare_for(const RunConfig& cfg, const CorpusData& data, FeatureSet set) {
  const auto tables = extract_features(data.manifest, cfg, {set});
  PreparedSet p = prepare_set(tables.tables.at(set), data, test_splits(data, cfg.task), cfg.scaling);
  if (uses_selection(cfg.task)) {
    if (!is_selectable_set(set))
      throw ConfigError(std::string(feature_set_name(set)) + " is not used with feature selection");
    restrict_to_selected(p, analyze_set(p, cfg.threads));
  }
  return p;
}

int cmd_train(const RunConfig& cfg, const std::string& set_name, const std::string& model_name, std::string out) {
  const FeatureSet set = parse_feature_set(set_name);
  const ModelFamily family = parse_family(model_name);
  const CorpusData data = load_corpora(cfg);
  const PreparedSet p = prepare_for(cfg, data, set);
  const CvPlan plan = make_cv_plan(p.train, cfg.cv_folds, cfg.seed);
  TrainResult r = train(HyperGrid::standard(family), p.train, plan, train_options(cfg));
  r.model.feature_set = set_name;
  r.model.impute_medians = p.train_medians;
  r.model.scaler = p.train_scaler;
  if (out.empty())
    out = (cfg.output_path() / "models" / (std::string(task_name(cfg.task)) + "_" + set_name + "_" + model_name + ".json"))
              .string();
  save_model(out, r.model);
  write_file(fs::path(out).replace_extension(".grid.tsv"), grid_tsv(r));
  std::cout << "cv_uar " << format_fixed(r.model.cv_uar, 2) << " [" << describe(r.model.params) << "] -> " << out
            << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& model_path, const std::string& corpus) {
  const TrainedModel model = load_model(model_path);
  const CorpusData data = load_corpora(cfg);
  const FeatureSet set = parse_feature_set(model.feature_set);
  const PreparedSet p = prepare_for(cfg, data, set);
  const fs::path out = cfg.output_path() / "evaluate";
  const std::string hash = config_hash(cfg);
  std::vector<EvalReport> reports;
  for (const auto& [cid, m] : p.tests) {
    if (!corpus.empty() && cid != corpus) continue;
    EvalReport r = evaluate_model(model, m, cfg);
    r.task_id = task_name(cfg.task);
    r.test_corpus = cid;
    r.feature_set = model.feature_set;
    r.model_family = family_name(model.family());
    r.config_hash = hash;
    const std::string stem = report_stem(r, true);
    write_file(out / ("report_" + stem + ".tsv"), report_tsv(r));
    write_file(out / ("roc_" + stem + ".csv"), roc_csv(r.roc));
    reports.push_back(std::move(r));
  }
  if (reports.empty()) throw ConfigError("no test split matches corpus '" + corpus + "'");
  std::cout << report_table(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech-based depression screening: features, selection, classifiers, evaluation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic two-corpus dataset");
  std::string synth_out, preset, spec_path, lexicon_dir = MOODSCREEN_DATA_DIR;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::size_t> segments;
  std::optional<double> valence_r;
  bool no_audio = false, no_transcripts = false, embeddings = false;
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--preset", preset, "table1, null or separable");
  synth->add_option("--spec", spec_path, "JSON spec (overrides the preset)");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--segments", segments, "segments per speaker");
  synth->add_option("--valence-r", valence_r, "target Cohen r of the valence effect");
  synth->add_option("--lexicon-dir", lexicon_dir, "directory with lexicon_en.tsv and lexicon_de.tsv");
  synth->add_flag("--no-audio", no_audio, "skip WAV generation");
  synth->add_flag("--no-transcripts", no_transcripts, "skip transcripts");
  synth->add_flag("--embeddings", embeddings, "write wav2vec2 and roberta sidecars");

  Overrides extract_o, analyze_o, train_o, evaluate_o, run_o;
  auto* extract = app.add_subcommand("extract", "extract or ingest features (cached)");
  extract_o.attach(extract);
  bool seg_manifest = false;
  extract->add_flag("--segment-manifest", seg_manifest, "write VAD-expanded manifests instead of features");

  auto* analyze = app.add_subcommand("analyze", "Mann-Whitney feature tests on the training split");
  analyze_o.attach(analyze);

  auto* train_cmd = app.add_subcommand("train", "grid search and fit one model");
  train_o.attach(train_cmd);
  std::string train_set, train_model, train_out;
  train_cmd->add_option("--feature-set", train_set, "feature set")->required();
  train_cmd->add_option("--model", train_model, "svm, rf or gbt")->required();
  train_cmd->add_option("--model-out", train_out, "model file to write");

  auto* evaluate = app.add_subcommand("evaluate", "score a saved model on test splits");
  evaluate_o.attach(evaluate);
  std::string model_path, corpus;
  evaluate->add_option("--model", model_path, "model file")->required();
  evaluate->add_option("--corpus", corpus, "only this test corpus");

  auto* run = app.add_subcommand("run-task", "run a full task and write all reports");
  run_o.attach(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, preset, spec_path, synth_seed, segments, no_audio, no_transcripts, embeddings,
                       valence_r, lexicon_dir);
    if (extract->parsed()) return cmd_extract(extract_o.load(), seg_manifest);
    if (analyze->parsed()) return cmd_analyze(analyze_o.load());
    if (train_cmd->parsed()) return cmd_train(train_o.load(), train_set, train_model, train_out);
    if (evaluate->parsed()) return cmd_evaluate(evaluate_o.load(), model_path, corpus);
    if (run->parsed()) {
      const auto out = run_task(run_o.load());
      std::cout << report_table(out.reports);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::data_integrity);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::data_integrity);
  }
  return 0;
}
