#include <catch_amalgamated.hpp>

#include <random>

#include "moodscreen/acoustic/feature_sets.hpp"
#include "moodscreen/core/quantile.hpp"
#include "moodscreen/pipeline/synth.hpp"
#include "oracles.hpp"

using namespace moodscreen;
using Catch::Approx;

namespace {

AudioBuffer white_noise(double seconds, std::uint64_t seed, double sd = 0.1) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, sd);
  AudioBuffer b;
  b.samples.resize(static_cast<std::size_t>(seconds * b.sample_rate));
  for (auto& s : b.samples) s = d(gen);
  return b;
}

std::vector<double> voiced_f0(const PitchTrack& p) {
  std::vector<double> out;
  for (std::size_t i = 0; i < p.f0.values.size(); ++i)
    if (p.f0.valid(i)) out.push_back(p.f0.values[i]);
  return out;
}

double track_mean(const LldTrack& t) {
  double acc = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.values.size(); ++i)
    if (t.valid(i)) {
      acc += t.values[i];
      ++n;
    }
  return n ? acc / static_cast<double>(n) : std::nan("");
}

AudioBuffer vowel(double f0, double jitter, double shimmer, std::uint64_t seed, double seconds = 1.0) {
  Rng rng(seed);
  return {detail::voiced_segment(f0, jitter, shimmer, 0.3, seed, static_cast<std::size_t>(seconds * 16000), 16000, rng),
          16000};
}

}  // namespace

TEST_CASE("pitch tracking") {
  SECTION("200 Hz sine: median at 200 Hz, every frame voiced") {
    const auto p = f0_track(oracle::sine(200, 1.0, 16000));
    const auto f0 = voiced_f0(p);
    CHECK(f0.size() == p.f0.values.size());
    CHECK(median(f0) == Approx(200).margin(2));
  }
  SECTION("white noise is mostly unvoiced") {
    const auto p = f0_track(white_noise(1.0, 1));
    CHECK(static_cast<double>(p.f0.valid_count()) <= 0.05 * static_cast<double>(p.f0.values.size()));
  }
  SECTION("linear chirp 150 to 250 Hz averages 200 Hz") {
    AudioBuffer b;
    const std::size_t n = 16000;
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / 16000;
      b.samples[i] = 0.5 * std::sin(2 * std::numbers::pi * (150 * t + 50 * t * t));
    }
    const auto f0 = voiced_f0(f0_track(b));
    REQUIRE(!f0.empty());
    CHECK(mean(f0) == Approx(200).margin(5));
  }
  SECTION("polarity inversion leaves F0 unchanged") {
    const auto v = vowel(150, 0.01, 0.03, 4);
    AudioBuffer inv = v;
    for (auto& s : inv.samples) s = -s;
    const auto a = f0_track(v), b = f0_track(inv);
    REQUIRE(a.f0.values.size() == b.f0.values.size());
    for (std::size_t i = 0; i < a.f0.values.size(); ++i) {
      CHECK(a.f0.valid(i) == b.f0.valid(i));
      if (a.f0.valid(i)) CHECK(a.f0.values[i] == Approx(b.f0.values[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("perturbation measures") {
  auto measure = [](const AudioBuffer& b) { return perturbation(b, f0_track(b)); };
  SECTION("constant pulse train: no jitter, no shimmer") {
    const auto p = measure(oracle::pulse_train({0.0100}, 1.0));
    REQUIRE(p.jitter_local);
    CHECK(*p.jitter_local < 0.001);
    REQUIRE(p.shimmer_local);
    CHECK(*p.shimmer_local < 0.001);
  }
  SECTION("alternating 10.0 / 10.2 ms periods") {
    const auto p = measure(oracle::pulse_train({0.0100, 0.0102}, 1.0));
    REQUIRE(p.jitter_local);
    CHECK(100 * *p.jitter_local == Approx(100 * 0.2 / 10.1).margin(0.1));
  }
  SECTION("planted jitter on a synthetic vowel is recovered within 10%") {
    for (double planted : {0.005, 0.01, 0.02}) {
      const auto p = measure(vowel(200, planted, 0.0, 3, 2.0));
      REQUIRE(p.jitter_local);
      CHECK(*p.jitter_local == Approx(planted).epsilon(0.10));
    }
  }
  SECTION("too short to measure") {
    const auto p = measure(oracle::sine(200, 0.02, 16000));
    CHECK_FALSE(p.jitter_local);
  }
}

TEST_CASE("spectral descriptors") {
  SECTION("white noise has a flat slope") {
    const auto s = spectral_analysis(white_noise(1.0, 2));
    CHECK(track_mean(s.slope_0_500) == Approx(0).margin(1));
    CHECK(track_mean(s.slope_500_1500) == Approx(0).margin(1));
  }
  SECTION("1 kHz tone puts F1 at 1 kHz") {
    const auto s = spectral_analysis(oracle::sine(1000, 0.5, 16000));
    CHECK(track_mean(s.formant[0]) == Approx(1000).margin(50));
  }
  SECTION("silence sits at the intensity floor with zero flux") {
    AudioBuffer z;
    z.samples.assign(8000, 0.0);
    const auto s = spectral_analysis(z);
    REQUIRE(!s.intensity_db.values.empty());
    for (double v : s.intensity_db.values) CHECK(v == kIntensityFloorDb);
    for (double v : s.flux.values) CHECK(v == 0.0);
  }
}

TEST_CASE("functionals") {
  LldTrack t;
  t.name = "x";
  SECTION("constant track") {
    t.values.assign(50, 3.5);
    const auto f = functionals(t);
    CHECK(*f.at("x_mean") == 3.5);
    CHECK(*f.at("x_cov") == 0.0);
    CHECK(*f.at("x_range_p20_p80") == 0.0);
  }
  SECTION("1..100 has median 50.5; rising track has no falling slope") {
    for (int i = 1; i <= 100; ++i) t.values.push_back(i);
    const auto f = functionals(t);
    CHECK(*f.at("x_p50") == Approx(50.5));
    CHECK(*f.at("x_falling_slope_mean") == 0.0);
    CHECK(*f.at("x_rising_slope_mean") == Approx(100.0));
  }
  SECTION("reversal keeps level statistics and swaps slopes") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> d(1, 10);
    for (int i = 0; i < 80; ++i) t.values.push_back(d(gen));
    LldTrack r = t;
    std::reverse(r.values.begin(), r.values.end());
    const auto a = functionals(t), b = functionals(r);
    for (const char* k : {"x_mean", "x_cov", "x_p20", "x_p50", "x_p80", "x_range_p20_p80"})
      CHECK(*a.at(k) == Approx(*b.at(k)).epsilon(1e-12));
    CHECK(*a.at("x_rising_slope_mean") == Approx(*b.at("x_falling_slope_mean")).epsilon(1e-12));
  }
  SECTION("empty or fully masked track is all missing") {
    t.values.assign(5, 1.0);
    t.mask.assign(5, 0);
    for (const auto& [name, v] : functionals(t)) CHECK_FALSE(v);
  }
}

TEST_CASE("feature vectors") {
  const auto v = vowel(180, 0.01, 0.04, 7, 0.8);
  const auto praat = praat_vector(v);
  const auto ege = egemaps_vector(v);
  CHECK(praat.size() == kPraatSize);
  CHECK(praat.size() == 39);
  CHECK(ege.size() == kEgemapsSize);
  CHECK(ege.size() == 88);
  praat.validate();
  ege.validate();

  SECTION("deterministic") {
    const auto again = praat_vector(v);
    CHECK(again.names == praat.names);
    CHECK(again.values == praat.values);
  }
  SECTION("names do not depend on the input, even silence") {
    AudioBuffer z;
    z.samples.assign(4000, 0.0);
    CHECK(praat_vector(z).names == praat.names);
    CHECK(egemaps_vector(z).names == ege.names);
    egemaps_vector(z).validate();
  }
  SECTION("amplitude scaling only moves level features, by exactly 20 log10 c") {
    for (double c : {0.1, 2.0}) {
      AudioBuffer s = v;
      for (auto& x : s.samples) x *= c;
      for (const auto& [ref, scaled] : {std::pair{praat, praat_vector(s)}, std::pair{ege, egemaps_vector(s)}}) {
        for (std::size_t i = 0; i < ref.size(); ++i) {
          INFO(ref.names[i]);
          REQUIRE(ref.values[i].has_value() == scaled.values[i].has_value());
          if (!ref.values[i]) continue;
          const double expect = *ref.values[i] + (is_level_feature(ref.names[i]) ? 20 * std::log10(c) : 0.0);
          CHECK(*scaled.values[i] == Approx(expect).epsilon(1e-6).margin(1e-9));
        }
      }
    }
  }
  SECTION("named measures land in the vector") {
    auto at = [&](const FeatureVector& fv, const std::string& n) {
      for (std::size_t i = 0; i < fv.size(); ++i)
        if (fv.names[i] == n) return fv.values[i];
      FAIL("missing feature " << n);
      return std::optional<double>{};
    };
    CHECK(at(praat, "f0_mean_hz").value_or(0) == Approx(180).margin(10));
    CHECK(at(praat, "jitter_local").value_or(0) == Approx(0.01).epsilon(0.2));
  }
}
