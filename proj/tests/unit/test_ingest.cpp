#include <catch_amalgamated.hpp>

#include "moodscreen/ingest.hpp"
#include "test_util.hpp"

using namespace moodscreen;

TEST_CASE("sidecar files") {
  testutil::TempDir dir("sidecar");
  SECTION("SER line") {
    write_file(sidecar_path(dir.path, "k1", FeatureSet::ser_dims), "0.1 0.2 0.3\n");
    const auto v = read_sidecar(dir.path, "k1", FeatureSet::ser_dims);
    REQUIRE(v);
    const auto s = SerDims::from(*v);
    CHECK(s.arousal == 0.1);
    CHECK(s.valence == 0.2);
    CHECK(s.dominance == 0.3);
  }
  SECTION("wrong width") {
    std::string line;
    for (int i = 0; i < 1023; ++i) line += "0.5 ";
    write_file(sidecar_path(dir.path, "k2", FeatureSet::wav2vec2), line);
    CHECK_THROWS_AS(read_sidecar(dir.path, "k2", FeatureSet::wav2vec2), DataError);
  }
  SECTION("absent file is reported, not thrown") {
    CHECK_FALSE(read_sidecar(dir.path, "nope", FeatureSet::roberta));
  }
  SECTION("garbage and missing values") {
    write_file(sidecar_path(dir.path, "k3", FeatureSet::ser_dims), "0.1 abc 0.3\n");
    CHECK_THROWS_AS(read_sidecar(dir.path, "k3", FeatureSet::ser_dims), DataError);
    write_file(sidecar_path(dir.path, "k4", FeatureSet::ser_dims), "0.1 NA 0.3\n");
    CHECK_THROWS_AS(read_sidecar(dir.path, "k4", FeatureSet::ser_dims), DataError);
  }
  SECTION("write then read is bit-stable") {
    std::vector<double> vals(768);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::sin(static_cast<double>(i)) / 3.0 + 1e-17 * static_cast<double>(i);
    write_sidecar(dir.path, "k5", {FeatureSet::roberta, vals});
    const auto a = read_sidecar(dir.path, "k5", FeatureSet::roberta);
    REQUIRE(a);
    CHECK(a->values == vals);
    write_sidecar(dir.path, "k5", *a);
    CHECK(read_sidecar(dir.path, "k5", FeatureSet::roberta)->values == vals);
  }
  SECTION("index lists missing files") {
    write_sidecar(dir.path, "a", {FeatureSet::ser_dims, {1, 2, 3}});
    write_sidecar_index(dir.path, {{"a", FeatureSet::ser_dims}, {"b", FeatureSet::ser_dims}});
    CHECK(check_sidecar_index(dir.path) == std::vector<std::string>{"b.ser_dims"});
  }
  SECTION("dimensions and names") {
    CHECK(sidecar_dim(FeatureSet::wav2vec2) == 1024);
    CHECK(sidecar_dim(FeatureSet::roberta) == 768);
    CHECK(sidecar_names(FeatureSet::ser_dims) == std::vector<std::string>{"arousal", "valence", "dominance"});
    CHECK(sidecar_names(FeatureSet::wav2vec2).size() == 1024);
    CHECK_THROWS_AS(sidecar_dim(FeatureSet::praat), ConfigError);
  }
}

TEST_CASE("mean pooling") {
  CHECK(mean_pool({{1.5, -2.0, 3.0}}) == std::vector<double>{1.5, -2.0, 3.0});
  CHECK(mean_pool({{0, 0}, {2, 2}}) == std::vector<double>{1, 1});
  const std::vector<std::vector<double>> rows{{1, 5}, {2, 7}, {9, -1}};
  const auto a = mean_pool(rows);
  CHECK(mean_pool({rows[2], rows[0], rows[1]}) == a);
  CHECK_THROWS_AS(mean_pool({}), DataError);
  CHECK_THROWS_AS(mean_pool({{1, 2}, {1}}), DataError);
}
