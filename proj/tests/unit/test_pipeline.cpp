#include <catch_amalgamated.hpp>

#include "moodscreen/pipeline/synth.hpp"
#include "moodscreen/pipeline/task.hpp"
#include "test_util.hpp"

using namespace moodscreen;
namespace fs = std::filesystem;

namespace {

const Logger quiet = [](const std::string&) {};

SynthSpec small_spec() {
  SynthSpec s = SynthSpec::separable();
  s.corpora[0].train = {16, 6};
  s.corpora[0].dev = {4, 2};
  s.corpora[0].test = {10, 4};
  s.corpora[1].test = {10, 3};
  s.segments_per_speaker = 3;
  s.embeddings = true;
  return s;
}

RunConfig synth_config(const SynthSpec& spec, const fs::path& dir) {
  const auto out = synth_corpus(spec, dir, MOODSCREEN_DATA_DIR);
  return load_config(out.config);
}

}  // namespace

TEST_CASE("run config") {
  SECTION("unknown keys are rejected") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"tsak", "A"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"vad", {{"frame", 10}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"task", "D"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"seed", "x"}}), ConfigError);
  }
  SECTION("missing config file") { CHECK_THROWS_AS(load_config("/nonexistent/run.json"), ConfigError); }
  SECTION("hash ignores threads and output locations, not the seed") {
    RunConfig a = config_from_json(nlohmann::json{{"manifests", {"m.tsv"}}, {"train_corpus", "A"}});
    RunConfig b = a;
    b.threads = 4;
    b.output_dir = "elsewhere";
    b.cache_dir = "cache2";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 7;
    CHECK(config_hash(a) != config_hash(b));
  }
  SECTION("json round trip") {
    RunConfig a = config_from_json(nlohmann::json{{"manifests", {"m.tsv"}}, {"train_corpus", "A"}, {"task", "C_B"},
                                                  {"feature_sets", {"ser_dims"}}, {"scaling", "none"}});
    CHECK(config_hash(config_from_json(to_json(a))) == config_hash(a));
    CHECK(a.task == Task::C_B);
  }
  SECTION("validation") {
    RunConfig c = config_from_json(nlohmann::json{{"manifests", {"m.tsv"}}, {"train_corpus", "A"}});
    c.cv_folds = 1;
    CHECK_THROWS_AS(c.validate(false), ConfigError);
  }
}

TEST_CASE("synthetic roster matches the study design") {
  const auto spk = detail::roster(SynthSpec::table1());
  std::size_t train = 0, train_dep = 0, test_a = 0, test_a_dep = 0, test_b = 0, test_b_dep = 0;
  for (const auto& s : spk) {
    const bool dep = s.label == Label::depression;
    if (s.corpus_id == "A" && s.partition != Partition::test) {
      ++train;
      train_dep += dep;
    } else if (s.corpus_id == "A") {
      ++test_a;
      test_a_dep += dep;
    } else {
      ++test_b;
      test_b_dep += dep;
    }
    CHECK(binarize_label({s.corpus_id == "A" ? Instrument::phq : Instrument::bdi, s.score}) == s.label);
  }
  CHECK(train == 135);
  CHECK(train_dep == 42);
  CHECK(test_a == 44);
  CHECK(test_a_dep == 13);
  CHECK(test_b == 50);
  CHECK(test_b_dep == 4);
}

TEST_CASE("synthetic corpus files") {
  testutil::TempDir dir("synth");
  SynthSpec spec = small_spec();
  const auto out = synth_corpus(spec, dir.path, MOODSCREEN_DATA_DIR);
  CHECK(fs::exists(out.config));
  CHECK(fs::exists(dir.path / "ground_truth.json"));
  REQUIRE(out.manifests.size() == 2);
  const auto m = load_manifest(out.manifests[0]);
  CHECK(m.speakers.size() == 30);
  CHECK(m.segments.size() == 90);
  SECTION("same seed, same bytes") {
    testutil::TempDir again("synth2");
    synth_corpus(spec, again.path, MOODSCREEN_DATA_DIR);
    CHECK(read_file(out.manifests[0]) == read_file(again.path / out.manifests[0].filename()));
  }
  SECTION("bad spec") {
    spec.segments_per_speaker = 0;
    CHECK_THROWS_AS(synth_corpus(spec, dir.path / "x", MOODSCREEN_DATA_DIR), ConfigError);
  }
}

TEST_CASE("extraction cache") {
  testutil::TempDir dir("cache");
  RunConfig cfg = synth_config(small_spec(), dir.path);
  const auto data = load_corpora(cfg);
  const auto first = extract_features(data.manifest, cfg, {FeatureSet::praat}, quiet);
  CHECK_FALSE(first.tables.at(FeatureSet::praat).cache_hit);
  const auto second = extract_features(data.manifest, cfg, {FeatureSet::praat}, quiet);
  CHECK(second.tables.at(FeatureSet::praat).cache_hit);
  const auto& a = first.tables.at(FeatureSet::praat).rows;
  const auto& b = second.tables.at(FeatureSet::praat).rows;
  REQUIRE(a.size() == b.size());
  std::size_t mismatches = 0;
  for (const auto& [key, row] : a)
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double u = row[c], v = b.at(key)[c];
      mismatches += !(u == v || (is_missing(u) && is_missing(v)));
    }
  CHECK(mismatches == 0);

  RunConfig changed = cfg;
  changed.vad.energy_threshold_db -= 5;
  CHECK(extraction_key(changed, FeatureSet::praat) != extraction_key(cfg, FeatureSet::praat));
  CHECK(extraction_key(changed, FeatureSet::psycholing) == extraction_key(cfg, FeatureSet::psycholing));
  const auto third = extract_features(data.manifest, changed, {FeatureSet::praat}, quiet);
  CHECK_FALSE(third.tables.at(FeatureSet::praat).cache_hit);
}

TEST_CASE("task A over every feature set") {
  testutil::TempDir dir("taskA");
  RunConfig cfg = synth_config(small_spec(), dir.path);
  cfg.task = Task::A;
  cfg.model_families = {ModelFamily::svm};
  cfg.n_bootstrap = 200;
  const auto out = run_task(cfg, quiet);
  CHECK(out.reports.size() == cfg.feature_sets.size());
  for (const auto& r : out.reports) {
    INFO(r.feature_set);
    CHECK(r.test_corpus == "A");
    CHECK(r.n_speakers == 10);
    CHECK(fs::exists(out.dir / ("report_" + report_stem(r, false) + ".tsv")));
    CHECK(fs::exists(out.dir / "models" / (r.feature_set + "_svm.json")));
    CHECK(r.ci_low <= r.uar_pct);
    CHECK(r.uar_pct <= r.ci_high);
  }
  CHECK(fs::exists(out.dir / "run_manifest.json"));
  CHECK(fs::exists(out.dir / "summary.txt"));
}

TEST_CASE("task C_B selects the planted dimension") {
  testutil::TempDir dir("taskC");
  SynthSpec spec = SynthSpec::table1();
  spec.audio = false;
  spec.transcripts = false;
  spec.segments_per_speaker = 5;
  RunConfig cfg = synth_config(spec, dir.path);
  cfg.task = Task::C_B;
  cfg.feature_sets = {FeatureSet::ser_dims, FeatureSet::roberta};
  cfg.model_families = {ModelFamily::svm};
  cfg.n_bootstrap = 100;
  const auto out = run_task(cfg, quiet);
  CHECK(out.manifest["feature_sets"]["ser_dims"]["selected_features"] == nlohmann::json{"valence"});
  CHECK(out.manifest["skipped_feature_sets"] == nlohmann::json{"roberta"});
  REQUIRE(out.reports.size() == 2);
  CHECK(out.reports[0].test_corpus == "A");
  CHECK(out.reports[1].test_corpus == "B");

  SECTION("stand-alone analysis matches the task run") {
    const auto data = load_corpora(cfg);
    const auto ex = extract_features(data.manifest, cfg, {FeatureSet::ser_dims}, quiet);
    const auto prepared =
        prepare_set(ex.tables.at(FeatureSet::ser_dims), data, test_splits(data, cfg.task), cfg.scaling);
    CHECK(feature_tests_tsv(analyze_set(prepared)) == read_file(out.dir / "feature_tests_ser_dims.tsv"));
  }
}
