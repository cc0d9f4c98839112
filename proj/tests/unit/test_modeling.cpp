#include <catch_amalgamated.hpp>

#include <set>

#include "moodscreen/modeling/grid.hpp"
#include "test_util.hpp"

using namespace moodscreen;
using Catch::Approx;

namespace {

std::vector<Label> labels_of(std::size_t n_dep, std::size_t n_ctl) {
  std::vector<Label> l(n_dep, Label::depression);
  l.insert(l.end(), n_ctl, Label::no_depression);
  return l;
}

std::vector<double> scores(const FittedModel& fm, const FeatureMatrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = score_row(fm, m.row(r));
  return out;
}

HyperGrid small_grid(ModelFamily f) {
  HyperGrid g;
  g.family = f;
  if (f == ModelFamily::rf) {
    g.n_estimators = {20};
    g.criterion = {Criterion::gini};
    g.min_samples_split = {2};
    g.bootstrap = {true};
  } else if (f == ModelFamily::gbt) {
    g.n_estimators = {30};
    g.learning_rate = {0.1};
    g.max_depth = {3};
    g.colsample = {1};
    g.subsample = {1};
  } else {
    g.C = {1};
    g.kernel = {Kernel::rbf};
    g.gamma = {GammaMode::scale};
  }
  return g;
}

}  // namespace

TEST_CASE("robust scaler") {
  FeatureMatrix m;
  m.names = {"x", "y"};
  const double xs[] = {1, 2, 3, 4, 100};
  for (int i = 0; i < 5; ++i)
    m.append_row("r" + std::to_string(i), "s" + std::to_string(i), Label::no_depression,
                 std::vector<double>{xs[i], 7.0});
  const auto p = fit_robust_scaler(m, "A");
  CHECK(p.median[0] == 3);
  CHECK(p.iqr[0] == 2);
  CHECK(p.iqr[1] == 0);
  const auto s = apply(p, m);
  CHECK(s.at(2, 0) == 0);
  CHECK(s.at(4, 0) == 48.5);
  CHECK(s.at(0, 1) == 0);

  SECTION("an outlier does not move the centre or spread") {
    auto o = m;
    o.at(4, 0) = 1e6;
    const auto q = fit_robust_scaler(o, "A");
    CHECK(q.median[0] == p.median[0]);
    CHECK(q.iqr[0] == p.iqr[0]);
  }
  SECTION("scaled columns have median 0 and IQR 1") {
    const auto g = testutil::gaussian_matrix(20, 30, 3, 2, 0.4, 8);
    const auto scaled = apply(fit_robust_scaler(g, "A"), g);
    const auto q = fit_robust_scaler(scaled, "A");
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(q.median[c] == Approx(0).margin(1e-12));
      CHECK(q.iqr[c] == Approx(1).epsilon(1e-12));
    }
  }
  SECTION("schema mismatch") {
    auto other = m;
    other.names = {"y", "x"};
    CHECK_THROWS_AS(apply(p, other), DataError);
  }
}

TEST_CASE("class weights") {
  const auto w = class_weights(labels_of(42, 93));
  CHECK(w.depression == Approx(135.0 / 84));
  CHECK(w.no_depression == Approx(135.0 / 186));
  CHECK(class_weights(labels_of(93, 93)) == ClassWeights{1, 1});
  CHECK_THROWS_AS(class_weights(labels_of(0, 3)), DegenerateTaskError);
}

TEST_CASE("cross-validation plan") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = testutil::gaussian_matrix(13, 29, 1, 3, 0.0, seed);
    const auto plan = make_cv_plan(m, 5, seed);
    std::set<std::string> all(m.speakers.begin(), m.speakers.end());
    CHECK(plan.fold_of.size() == all.size());
    for (const auto& a : audit_folds(plan, m)) CHECK(a.shared_speakers.empty());
    std::size_t rows = 0;
    std::map<std::size_t, std::size_t> dep_per_fold;
    for (std::size_t f = 0; f < 5; ++f) {
      const auto va = plan.rows_in(m, f, true);
      rows += va.size();
      for (auto r : va) dep_per_fold[f] += m.labels[r] == Label::depression;
    }
    CHECK(rows == m.rows());
    for (const auto& [f, n] : dep_per_fold) CHECK(n / 3 >= 2);
  }
  CHECK_THROWS_AS(make_cv_plan(testutil::gaussian_matrix(1, 2, 1, 1, 0, 1), 5), DegenerateTaskError);
}

TEST_CASE("svm grid search") {
  const auto grid = HyperGrid::standard(ModelFamily::svm);
  const auto points = grid.points();
  CHECK(points.size() == 24);
  std::set<std::string> keys;
  for (const auto& p : points) keys.insert(detail::fit_key(p));
  CHECK(keys.size() == 18);

  const auto m = testutil::gaussian_matrix(20, 30, 3, 1, 3.0, 5);
  const auto plan = make_cv_plan(m);
  const auto res = train(grid, m, plan);
  CHECK(res.grid.size() == 24);
  CHECK(res.grid[res.best].mean_uar == Approx(100));
  CHECK(res.model.cv_uar == res.grid[res.best].mean_uar);
  for (const auto& g : res.grid) CHECK(g.mean_uar <= res.grid[res.best].mean_uar);

  TrainOptions two;
  two.threads = 2;
  const auto again = train(grid, m, plan, two);
  CHECK(again.best == res.best);
  CHECK(scores(again.model.fitted, m) == scores(res.model.fitted, m));
}

TEST_CASE("svm scores") {
  const auto m = testutil::gaussian_matrix(20, 20, 2, 1, 3.0, 6);
  for (Kernel k : {Kernel::linear, Kernel::rbf}) {
    SvmParams p;
    p.kernel = k;
    const auto fit = fit_svm(m.data, m.labels, p);
    CHECK(fit.score(std::vector<double>{3.5, 3.5}) > 0.5);
    CHECK(fit.score(std::vector<double>{-0.5, -0.5}) < 0.5);

    SECTION("row order does not matter") {
      std::vector<std::size_t> perm(m.rows());
      std::iota(perm.begin(), perm.end(), 0);
      std::reverse(perm.begin(), perm.end());
      const auto r = m.select_rows(perm);
      const auto fit2 = fit_svm(r.data, r.labels, p);
      for (std::size_t i = 0; i < m.rows(); ++i) CHECK(fit2.score(m.row(i)) == Approx(fit.score(m.row(i))).margin(1e-3));
    }
    SECTION("unit class weights equal no weights") {
      const auto fit2 = fit_svm(m.data, m.labels, p, ClassWeights{1, 1});
      for (std::size_t i = 0; i < m.rows(); ++i) CHECK(fit2.score(m.row(i)) == fit.score(m.row(i)));
    }
  }
}

TEST_CASE("tree ensembles") {
  const auto m = testutil::gaussian_matrix(25, 35, 3, 1, 1.0, 7);
  ForestParams fp;
  fp.n_estimators = 25;
  BoostParams bp;
  bp.n_estimators = 40;
  bp.max_depth = 3;

  SECTION("single-class labels score 1") {
    const std::vector<Label> all(m.rows(), Label::depression);
    const auto rf = fit_forest(m.data, all, fp);
    CHECK(rf.score(m.row(0)) == 1.0);
  }
  SECTION("reproducible for a fixed seed") {
    const auto a = fit_forest(m.data, m.labels, fp), b = fit_forest(m.data, m.labels, fp, ClassWeights{1, 1});
    for (std::size_t i = 0; i < m.rows(); ++i) CHECK(a.score(m.row(i)) == b.score(m.row(i)));
    const auto g1 = fit_boosting(m.data, m.labels, bp), g2 = fit_boosting(m.data, m.labels, bp);
    for (std::size_t i = 0; i < m.rows(); ++i) CHECK(g1.score(m.row(i)) == g2.score(m.row(i)));
  }
  SECTION("strictly increasing transforms of a feature leave predictions unchanged") {
    auto t = m;
    for (std::size_t r = 0; r < t.rows(); ++r) {
      t.at(r, 0) = std::exp(t.at(r, 0));
      t.at(r, 1) = 5 * t.at(r, 1) - 2;
    }
    const auto rf_a = fit_forest(m.data, m.labels, fp), rf_b = fit_forest(t.data, t.labels, fp);
    const auto gb_a = fit_boosting(m.data, m.labels, bp), gb_b = fit_boosting(t.data, t.labels, bp);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      CHECK(rf_a.score(m.row(i)) == rf_b.score(t.row(i)));
      CHECK(gb_a.score(m.row(i)) == Approx(gb_b.score(t.row(i))).margin(1e-12));
    }
  }
  SECTION("ensemble prefixes") {
    const auto rf = fit_forest(m.data, m.labels, fp);
    CHECK(rf.score(m.row(0), 1) == rf.trees[0].predict(m.row(0)));
    CHECK(rf.score(m.row(0), 0) == rf.score(m.row(0), 25));
  }
  SECTION("small grids learn a shifted class") {
    for (auto f : {ModelFamily::rf, ModelFamily::gbt}) {
      const auto sep = testutil::gaussian_matrix(20, 30, 2, 1, 4.0, 9);
      const auto res = train(small_grid(f), sep, make_cv_plan(sep));
      CHECK(res.model.cv_uar >= 90);
    }
  }
}

TEST_CASE("model file round trip") {
  const auto m = testutil::gaussian_matrix(15, 20, 2, 2, 1.5, 10);
  testutil::TempDir dir("model");
  for (auto f : {ModelFamily::svm, ModelFamily::rf, ModelFamily::gbt}) {
    auto res = train(small_grid(f), m, make_cv_plan(m));
    res.model.feature_set = "praat";
    const auto path = (dir.path / "m.json").string();
    save_model(path, res.model);
    const auto back = load_model(path);
    CHECK(back.family() == f);
    CHECK(back.feature_names == m.names);
    CHECK(back.score(m) == res.model.score(m));
    CHECK(serialize_model(back) == serialize_model(res.model));

    auto other = m;
    other.names = {"a", "b"};
    CHECK_THROWS_AS(back.score(other), DataError);
  }
  CHECK_THROWS_AS(deserialize_model("{}"), DataError);
  CHECK_THROWS_AS(deserialize_model("not json"), DataError);
  CHECK_THROWS_AS(deserialize_model(R"({"format":"moodscreen-model","version":99})"), DataError);
}
