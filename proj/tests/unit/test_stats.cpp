#include <catch_amalgamated.hpp>

#include <random>

#include "moodscreen/stats.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace moodscreen;
using Catch::Approx;

TEST_CASE("Mann-Whitney examples") {
  SECTION("identical samples") {
    const std::vector<double> a{1, 2, 3};
    const auto r = mann_whitney(a, a);
    CHECK(r.p >= 0.99);
    CHECK(std::abs(r.z) < 1e-12);
  }
  SECTION("complete separation, exact p = 2 / C(6,3)") {
    const auto r = mann_whitney(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
    CHECK(r.u == 0);
    CHECK(r.exact);
    CHECK(r.p == Approx(0.1).epsilon(1e-12));
    CHECK(r.z < 0);
  }
  SECTION("empty sample") { CHECK_THROWS_AS(mann_whitney(std::vector<double>{}, std::vector<double>{1}), ValidationError); }
}

TEST_CASE("exact p equals brute-force enumeration") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> size(1, 9), level(0, 4);
  for (int i = 0; i < 60; ++i) {
    std::vector<double> a(static_cast<std::size_t>(size(gen))), b(static_cast<std::size_t>(size(gen)));
    for (auto& x : a) x = level(gen);
    for (auto& x : b) x = level(gen);
    const auto r = mann_whitney(a, b);
    REQUIRE(r.exact);
    CHECK(r.p == Approx(oracle::brute_force_p(a, b)).margin(1e-12));
    CHECK(oracle::exact_dp_p(a, b) == Approx(oracle::brute_force_p(a, b)).margin(1e-12));
  }
}

TEST_CASE("normal approximation tracks the exact distribution for large samples") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> d(0, 1);
  for (double shift : {0.0, 0.4, 0.8}) {
    std::vector<double> a(30), b(25);
    for (auto& x : a) x = d(gen) + shift;
    for (auto& x : b) x = d(gen);
    const auto r = mann_whitney(a, b);
    CHECK_FALSE(r.exact);
    CHECK(r.p == Approx(oracle::exact_dp_p(a, b)).margin(1e-2));
  }
}

TEST_CASE("rank-test properties") {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> d(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(12 + trial), b(9 + trial);
    for (auto& x : a) x = std::round(4 * (d(gen) + 0.3)) / 4;
    for (auto& x : b) x = std::round(4 * d(gen)) / 4;
    const auto ab = mann_whitney(a, b), ba = mann_whitney(b, a);
    CHECK(ab.u + ba.u == Approx(static_cast<double>(a.size() * b.size())));
    CHECK(ab.u == oracle::u_statistic(a, b));
    CHECK(ab.z == Approx(-ba.z).margin(1e-12));
    CHECK(ab.p == Approx(ba.p).margin(1e-12));
    // Strictly increasing transform of every value.
    auto f = [](double x) { return std::exp(x) + x * x * x; };
    std::vector<double> fa(a), fb(b);
    for (auto& x : fa) x = f(x);
    for (auto& x : fb) x = f(x);
    const auto t = mann_whitney(fa, fb);
    CHECK(t.u == ab.u);
    CHECK(t.p == ab.p);
    CHECK(t.z == ab.z);
  }
}

TEST_CASE("Cohen r") {
  CHECK(cohen_r(0, 10) == 0);
  CHECK(cohen_r(3, 9) == Approx(1.0));
  CHECK(cohen_r(-3, 9) == Approx(1.0));
  CHECK_THROWS_AS(cohen_r(1, 1), ValidationError);
}

TEST_CASE("selection rule") {
  CHECK_FALSE(passes_selection(0.04, 0.29));
  CHECK_FALSE(passes_selection(0.06, 0.50));
  CHECK(passes_selection(0.04, 0.30));
  CHECK_FALSE(passes_selection(0.05, 0.9));
}

TEST_CASE("feature selection on a matrix") {
  auto m = testutil::gaussian_matrix(42, 93, 4, 1, 0.0, 21);
  // Plant a strong effect in f2 only.
  for (std::size_t r = 0; r < m.rows(); ++r)
    if (m.labels[r] == Label::depression) m.at(r, 2) -= 1.5;
  const auto results = select_features(m);
  REQUIRE(results.size() == 4);
  CHECK(selected_names(results) == std::vector<std::string>{"f2"});
  CHECK(std::is_sorted(results.begin(), results.end(),
                       [](const auto& x, const auto& y) { return x.feature_name < y.feature_name; }));
  for (const auto& r : results) CHECK(r.selected == passes_selection(r.p_value, r.cohen_r));

  SECTION("monotone transform of one feature keeps the selected set") {
    auto t = m;
    for (std::size_t r = 0; r < t.rows(); ++r) t.at(r, 2) = std::exp(t.at(r, 2));
    CHECK(selected_names(select_features(t)) == selected_names(results));
  }
  SECTION("thread count does not matter") {
    const auto par = select_features(m, 4);
    for (std::size_t i = 0; i < par.size(); ++i) CHECK(par[i].p_value == results[i].p_value);
  }
  SECTION("missing values are skipped per column") {
    auto t = m;
    t.at(0, 0) = kMissing;
    CHECK_NOTHROW(select_features(t));
  }
  SECTION("single class is degenerate") {
    const auto one = testutil::gaussian_matrix(0, 10, 2, 1, 0.0, 3);
    CHECK_THROWS_AS(select_features(one), DegenerateTaskError);
  }
  SECTION("null data passes the p threshold about 5% of the time") {
    std::size_t sig = 0, tested = 0, selected = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (const auto& r : select_features(testutil::gaussian_matrix(42, 93, 50, 1, 0.0, 100 + seed))) {
        sig += r.p_value < kSelectionAlpha;
        selected += r.selected;
        ++tested;
      }
    }
    const double rate = static_cast<double>(sig) / static_cast<double>(tested);
    CHECK(rate == Approx(0.05).margin(0.02));
    CHECK(static_cast<double>(selected) / static_cast<double>(tested) <= 0.01);
  }
}

TEST_CASE("feature test table") {
  const auto tsv = feature_tests_tsv({{"valence", 10, -4.2, 1e-5, 0.66, true}});
  CHECK(tsv.find("valence") != std::string::npos);
  CHECK(tsv.find('\t') != std::string::npos);
}
