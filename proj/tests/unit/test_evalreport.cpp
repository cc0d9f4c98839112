#include <catch_amalgamated.hpp>

#include <random>

#include "moodscreen/evalreport.hpp"
#include "oracles.hpp"

using namespace moodscreen;
using Catch::Approx;

namespace {

std::vector<SpeakerPrediction> from_recalls(std::size_t n_dep, std::size_t hit_dep, std::size_t n_ctl,
                                            std::size_t hit_ctl) {
  std::vector<SpeakerPrediction> out;
  for (std::size_t i = 0; i < n_dep; ++i)
    out.push_back({"d" + std::to_string(i), i < hit_dep ? 0.9 : 0.1,
                   i < hit_dep ? Label::depression : Label::no_depression, Label::depression, 1});
  for (std::size_t i = 0; i < n_ctl; ++i)
    out.push_back({"c" + std::to_string(i), i < hit_ctl ? 0.1 : 0.9,
                   i < hit_ctl ? Label::no_depression : Label::depression, Label::no_depression, 1});
  return out;
}

std::vector<SpeakerPrediction> noisy(std::size_t n_dep, std::size_t n_ctl, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0, 0.2);
  std::vector<SpeakerPrediction> out;
  for (std::size_t i = 0; i < n_dep + n_ctl; ++i) {
    const bool dep = i < n_dep;
    const double s = (dep ? 0.6 : 0.4) + d(gen);
    out.push_back({"s" + std::to_string(i), s, s >= 0.5 ? Label::depression : Label::no_depression,
                   dep ? Label::depression : Label::no_depression, 1});
  }
  return out;
}

}  // namespace

TEST_CASE("speaker aggregation") {
  CHECK(aggregate_speaker(std::vector<double>{1, 1, 1}).predicted == Label::depression);
  const auto tie = aggregate_speaker(std::vector<double>{0.2, 0.8});
  CHECK(tie.score == Approx(0.5));
  CHECK(tie.predicted == Label::depression);
  CHECK(aggregate_speaker(std::vector<double>{0.37}).score == 0.37);
  CHECK(aggregate_speaker(std::vector<double>{0.6, 0.6, 0.0}, AggregationRule::majority_vote).predicted ==
        Label::depression);
  CHECK_THROWS_AS(aggregate_speaker(std::vector<double>{}), ValidationError);

  const std::vector<std::string> spk{"b", "a", "b"};
  const std::vector<Label> truth{Label::depression, Label::no_depression, Label::depression};
  const auto preds = aggregate_by_speaker(spk, truth, std::vector<double>{0.9, 0.1, 0.5});
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].speaker_id == "b");
  CHECK(preds[0].aggregated_score == Approx(0.7));
  CHECK(preds[0].n_segments == 2);
}

TEST_CASE("UAR") {
  CHECK(uar(from_recalls(100, 85, 100, 61)) == Approx(73));
  CHECK(uar(from_recalls(100, 41, 100, 91)) == Approx(66));
  CHECK(uar(from_recalls(10, 10, 30, 0)) == Approx(50));
  CHECK(uar(from_recalls(10, 0, 30, 30)) == Approx(50));
  CHECK_THROWS_AS(uar(from_recalls(0, 0, 3, 3)), DegenerateTaskError);
  bool single = false;
  CHECK(uar_present(from_recalls(0, 0, 4, 3), &single) == Approx(75));
  CHECK(single);
}

TEST_CASE("precision, recall and F1") {
  const auto r = prf(from_recalls(4, 3, 4, 3));
  CHECK(r.precision_dep == Approx(75));
  CHECK(r.recall_dep == Approx(75));
  CHECK(r.f1_macro == Approx(75));
  const auto perfect = prf(from_recalls(5, 5, 7, 7));
  CHECK(perfect.f1_macro == Approx(100));
  CHECK(perfect.precision_no_dep == Approx(100));
  const auto none = prf(from_recalls(3, 0, 3, 3));
  CHECK(none.precision_dep_undefined);
  CHECK(none.precision_dep == 0);
}

TEST_CASE("ROC and AUC") {
  const std::vector<Label> t{Label::depression, Label::depression, Label::no_depression, Label::no_depression};
  CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, t).auc == 1.0);
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, t).auc == 0.0);
  CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, t).auc == 0.5);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1}, std::vector<Label>{Label::depression}), DegenerateTaskError);

  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> lv(0, 6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s(25);
    std::vector<Label> y(25);
    for (std::size_t i = 0; i < s.size(); ++i) {
      y[i] = i % 3 == 0 ? Label::depression : Label::no_depression;
      s[i] = lv(gen) / 6.0;
    }
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < s.size(); ++i) (y[i] == Label::depression ? pos : neg).push_back(s[i]);
    const auto roc = roc_auc(s, y);
    CHECK(roc.auc == Approx(oracle::pairwise_auc(pos, neg)).margin(1e-12));
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
      CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
    }
    CHECK(roc.points.back().fpr == 1.0);
    CHECK(roc.points.back().tpr == 1.0);
    std::vector<double> cubed(s);
    for (auto& v : cubed) v = v * v * v + 2;
    CHECK(roc_auc(cubed, y).auc == roc.auc);
  }
}

TEST_CASE("bootstrap confidence interval") {
  const SpeakerMetric metric = [](std::span<const SpeakerPrediction> p) { return uar(p); };
  SECTION("perfect predictions have zero width") {
    const auto ci = bootstrap_ci(from_recalls(10, 10, 10, 10), metric, 200);
    CHECK(ci.low == 100);
    CHECK(ci.high == 100);
  }
  SECTION("reproducible for a fixed seed") {
    const auto p = noisy(14, 30, 1);
    const auto a = bootstrap_ci(p, metric, 500, 9), b = bootstrap_ci(p, metric, 500, 9);
    CHECK(a.low == b.low);
    CHECK(a.high == b.high);
  }
  SECTION("width for 44 speakers sits in a plausible range") {
    const auto ci = bootstrap_ci(noisy(14, 30, 2), metric, 1000, 42);
    CHECK(ci.high - ci.low >= 15);
    CHECK(ci.high - ci.low <= 35);
  }
  SECTION("more iterations barely move the bounds") {
    const auto p = noisy(14, 30, 3);
    const auto a = bootstrap_ci(p, metric, 1000, 42), b = bootstrap_ci(p, metric, 10000, 42);
    CHECK(std::abs(a.low - b.low) < 2);
    CHECK(std::abs(a.high - b.high) < 2);
  }
  SECTION("point estimate inside the reported interval") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = evaluate_predictions(noisy(6, 9, seed), 200, seed);
      CHECK(r.ci_low <= r.uar_pct);
      CHECK(r.uar_pct <= r.ci_high);
    }
  }
  SECTION("too few speakers") { CHECK_THROWS_AS(bootstrap_ci(from_recalls(1, 1, 0, 0), metric), DegenerateTaskError); }
}

TEST_CASE("report formatting") {
  auto r = evaluate_predictions(noisy(10, 20, 4), 100, 42);
  r.task_id = "A";
  r.test_corpus = "A";
  r.feature_set = "praat";
  r.model_family = "svm";
  const auto tsv = report_tsv(r);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 2);
  const auto header = report_header();
  const auto row = report_row(r);
  CHECK(std::count(header.begin(), header.end(), '\t') == std::count(row.begin(), row.end(), '\t'));
  CHECK(roc_csv(r.roc).rfind("fpr,tpr\n0.000000,0.000000\n", 0) == 0);
  CHECK(report_table({r}).find("praat") != std::string::npos);
}
