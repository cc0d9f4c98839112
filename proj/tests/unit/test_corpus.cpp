#include <catch_amalgamated.hpp>

#include <set>

#include "moodscreen/corpus.hpp"
#include "test_util.hpp"

using namespace moodscreen;

namespace {

std::string header() {
  std::string h;
  for (const auto& c : manifest_columns()) h += (h.empty() ? "" : "\t") + c;
  return h;
}

std::string row(const std::string& spk, const std::string& inst, const std::string& score, const std::string& part,
                const std::string& start = "0", const std::string& end = "1") {
  return "A\t" + spk + "\tF\t" + inst + "\t" + score + "\t" + part + "\taudio/" + spk + ".wav\t" + start + "\t" + end +
         "\t\t";
}

}  // namespace

TEST_CASE("questionnaire cut-offs") {
  CHECK(binarize_label({Instrument::phq, 10}) == Label::depression);
  CHECK(binarize_label({Instrument::phq, 9}) == Label::no_depression);
  CHECK(binarize_label({Instrument::bdi, 19}) == Label::no_depression);
  CHECK(binarize_label({Instrument::bdi, 20}) == Label::depression);
  CHECK_THROWS_AS(binarize_label({Instrument::phq, 28}), ValidationError);
  CHECK_THROWS_AS(binarize_label({Instrument::bdi, -1}), ValidationError);
}

TEST_CASE("binarization is monotone in the raw score") {
  for (auto inst : {Instrument::phq, Instrument::bdi})
    for (int s1 = 0; s1 <= max_score(inst); ++s1)
      for (int s2 = s1; s2 <= max_score(inst); ++s2)
        if (binarize_label({inst, s1}) == Label::depression) REQUIRE(binarize_label({inst, s2}) == Label::depression);
}

TEST_CASE("manifest parsing") {
  SECTION("three rows, three speakers") {
    const auto m = parse_manifest({header(), row("s1", "PHQ", "3", "train"), row("s2", "PHQ", "12", "dev"),
                                   row("s3", "PHQ", "20", "test")},
                                  "/data");
    REQUIRE(m.speakers.size() == 3);
    CHECK(m.segments.size() == 3);
    CHECK(m.speakers[1].label == Label::depression);
    CHECK(m.segments[0].audio_path == std::filesystem::path("/data/audio/s1.wav"));
    CHECK(m.segments[0].segment_key == segment_key_for("A", "s1", 0));
  }
  SECTION("missing score drops the row and counts it") {
    const auto m = parse_manifest({header(), row("s1", "PHQ", "3", "train"), row("s2", "PHQ", "", "train")}, ".");
    CHECK(m.speakers.size() == 1);
    CHECK(m.dropped_rows == 1);
    CHECK(m.dropped_speakers.count("A/s2") == 1);
  }
  SECTION("several segments per speaker share one record") {
    const auto m = parse_manifest(
        {header(), row("s1", "PHQ", "3", "train", "0", "1"), row("s1", "PHQ", "3", "train", "1", "2")}, ".");
    CHECK(m.speakers.size() == 1);
    CHECK(m.segments.size() == 2);
    CHECK(m.segments[1].segment_key == segment_key_for("A", "s1", 1));
  }
  SECTION("duplicate speaker with conflicting metadata is rejected") {
    CHECK_THROWS_AS(parse_manifest({header(), row("s1", "PHQ", "3", "train", "0", "1"),
                                    row("s1", "PHQ", "15", "train", "1", "2")},
                                   "."),
                    DataError);
  }
  SECTION("duplicate segment is rejected") {
    CHECK_THROWS_AS(parse_manifest({header(), row("s1", "PHQ", "3", "train"), row("s1", "PHQ", "3", "train")}, "."),
                    DataError);
  }
  SECTION("bad header, bad score, wrong width") {
    CHECK_THROWS_AS(parse_manifest({"corpus_id\tspeaker"}, "."), DataError);
    CHECK_THROWS_AS(parse_manifest({header(), row("s1", "PHQ", "x", "train")}, "."), DataError);
    CHECK_THROWS_AS(parse_manifest({header(), row("s1", "PHQ", "30", "train")}, "."), DataError);
    CHECK_THROWS_AS(parse_manifest({header(), "A\ts1\tF"}, "."), DataError);
  }
}

TEST_CASE("splits") {
  auto rec = [](const std::string& corpus, const std::string& id, Partition p, int score = 5) {
    return make_speaker(corpus, id, Sex::female, QuestionnaireScore{Instrument::phq, score}, p);
  };
  SECTION("train and dev merge; test kept apart") {
    std::vector<SpeakerRecord> recs;
    for (int i = 0; i < 107; ++i) recs.push_back(rec("A", "t" + std::to_string(i), Partition::train));
    for (int i = 0; i < 28; ++i) recs.push_back(rec("A", "d" + std::to_string(i), Partition::dev));
    for (int i = 0; i < 44; ++i) recs.push_back(rec("A", "x" + std::to_string(i), Partition::test));
    for (int i = 0; i < 50; ++i) recs.push_back(rec("B", "b" + std::to_string(i), Partition::test));
    const auto splits = make_splits(recs, {"A"});
    REQUIRE(splits.size() == 3);
    CHECK(splits[0].name == SplitName::train);
    CHECK(splits[0].speaker_ids.size() == 135);
    CHECK(splits[1].speaker_ids.size() == 44);
    CHECK(splits[2].corpus_id == "B");
    CHECK(splits[2].speaker_ids.size() == 50);
    std::set<std::string> seen;
    for (const auto& s : splits)
      for (const auto& id : s.speaker_ids) CHECK(seen.insert(s.corpus_id + "/" + id).second);
  }
  SECTION("empty dev partition") {
    const auto splits = make_splits({rec("A", "t1", Partition::train), rec("A", "t2", Partition::train)}, {"A"});
    CHECK(splits.size() == 1);
    CHECK(splits[0].speaker_ids == std::vector<std::string>{"t1", "t2"});
  }
  SECTION("speaker in two partitions") {
    CHECK_THROWS_AS(make_splits({rec("A", "t1", Partition::train), rec("A", "t1", Partition::test)}, {"A"}),
                    DataError);
  }
  SECTION("no training speakers") {
    CHECK_THROWS_AS(make_splits({rec("A", "t1", Partition::test)}, {"A"}), DataError);
  }
}

TEST_CASE("oversampling") {
  SECTION("42 vs 93 rows become 93 vs 93") {
    const auto m = testutil::gaussian_matrix(42, 93, 2, 1, 0.0, 1);
    for (auto unit : {OversampleUnit::row, OversampleUnit::speaker}) {
      const auto o = oversample(m, {42, unit});
      CHECK(o.count(Label::depression) == 93);
      CHECK(o.count(Label::no_depression) == 93);
    }
  }
  SECTION("balanced input is unchanged") {
    const auto m = testutil::gaussian_matrix(5, 5, 2, 3, 0.0, 2);
    CHECK(oversample_rows(m, {}).size() == m.rows());
  }
  SECTION("same seed, same rows; output size is twice the majority") {
    for (std::uint64_t seed : {0ull, 42ull, 7ull}) {
      const auto m = testutil::gaussian_matrix(3 + seed % 5, 11, 1, 1, 0.0, seed);
      const auto a = oversample_rows(m, {seed, OversampleUnit::row});
      CHECK(a == oversample_rows(m, {seed, OversampleUnit::row}));
      CHECK(a.size() == 2 * std::max(m.count(Label::depression), m.count(Label::no_depression)));
    }
  }
  SECTION("speaker unit copies whole speakers") {
    const auto m = testutil::gaussian_matrix(2, 6, 1, 4, 0.0, 3);
    const auto o = oversample(m, {42, OversampleUnit::speaker});
    std::map<std::string, std::size_t> rows_of;
    for (const auto& s : o.speakers) ++rows_of[s];
    for (const auto& [spk, n] : rows_of) CHECK(n % 4 == 0);
    CHECK(o.count(Label::depression) == 24);
  }
  SECTION("single class is degenerate") {
    const auto m = testutil::gaussian_matrix(0, 4, 1, 1, 0.0, 4);
    CHECK_THROWS_AS(oversample(m, {}), DegenerateTaskError);
  }
}
