#include <catch_amalgamated.hpp>

#include "moodscreen/textfeat.hpp"

using namespace moodscreen;
using Catch::Approx;

namespace {

Lexicon small_lexicon() {
  return Lexicon::parse({"# word\ttags", "not\tnegation", "good\tadjective,positive-sentiment",
                         "bad\tadjective,negative-sentiment", "dog\tnoun", "runs\tverb", "because\tsubordinator"},
                        Language::en);
}

double value(const FeatureVector& v, const std::string& name) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.names[i] == name) return v.values[i].value();
  FAIL("no feature " << name);
  return 0;
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize("Not good.") == std::vector<std::string>{"not", "good"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Grüße, Welt!") == std::vector<std::string>{"grüße", "welt"});
  CHECK(tokenize("ÄRGER über Öl") == std::vector<std::string>{"ärger", "über", "öl"});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(split_sentences("One. Two two? Three!").size() == 3);
}

TEST_CASE("lexicon parsing") {
  const auto lex = small_lexicon();
  CHECK(lex.size() == 6);
  CHECK(Lexicon::has(lex.tags("good"), Tag::positive));
  CHECK(Lexicon::has(lex.tags("good"), Tag::adjective));
  CHECK_FALSE(Lexicon::has(lex.tags("good"), Tag::negation));
  CHECK(lex.words_with(Tag::adjective) == std::vector<std::string>{"bad", "good"});
  CHECK_THROWS_AS(Lexicon::parse({"word\tnonsense-tag"}, Language::en), DataError);
  CHECK_THROWS_AS(Lexicon::parse({"no tab here"}, Language::en), DataError);
  CHECK_THROWS_AS(Lexicon::parse({"# only a comment"}, Language::en), DataError);
}

TEST_CASE("shipped lexicons cover every tag") {
  for (auto [file, lang] : {std::pair{"lexicon_en.tsv", Language::en}, std::pair{"lexicon_de.tsv", Language::de}}) {
    const auto lex = Lexicon::load(std::filesystem::path(MOODSCREEN_DATA_DIR) / file, lang);
    for (Tag t : kTags) CHECK_FALSE(lex.words_with(t).empty());
  }
}

TEST_CASE("psycholinguistic vector") {
  const auto lex = small_lexicon();
  SECTION("negation proportion by hand count") {
    const auto v = psycholing_vector({"s", "not good not bad", Language::en}, lex);
    CHECK(value(v, "prop_negation") == Approx(0.5));
    CHECK(value(v, "count_negation") == 2);
  }
  SECTION("type-token ratio") {
    CHECK(value(psycholing_vector({"s", "the the the", Language::en}, lex), "type_token_ratio") == Approx(1.0 / 3));
  }
  SECTION("empty text: 51 zeros") {
    const auto v = psycholing_vector({"s", "", Language::en}, lex);
    CHECK(v.size() == kPsycholingSize);
    CHECK(v.size() == 51);
    for (const auto& x : v.values) CHECK(x == 0.0);
  }
  SECTION("proportions in [0,1]; duplication keeps proportions and doubles counts") {
    const std::string text = "The dog runs because it is not good. Bad dog! Why?";
    const auto a = psycholing_vector({"s", text, Language::en}, lex);
    const auto b = psycholing_vector({"s", text + " " + text, Language::en}, lex);
    REQUIRE(a.names == b.names);
    for (std::size_t i = 0; i < a.size(); ++i) {
      INFO(a.names[i]);
      if (a.names[i].rfind("prop_", 0) == 0) {
        CHECK(*a.values[i] >= 0.0);
        CHECK(*a.values[i] <= 1.0);
        CHECK(*b.values[i] == Approx(*a.values[i]));
      }
      if (a.names[i].rfind("count_", 0) == 0 || a.names[i] == "token_count" || a.names[i] == "sentence_count")
        CHECK(*b.values[i] == Approx(2 * *a.values[i]));
    }
  }
  SECTION("bag-of-words proportions ignore word order within a sentence") {
    const auto a = psycholing_vector({"s", "good dog runs not bad", Language::en}, lex);
    const auto b = psycholing_vector({"s", "bad runs dog good not", Language::en}, lex);
    for (Tag t : kTags) {
      const std::string n = std::string("prop_") + tag_name(t);
      CHECK(value(a, n) == value(b, n));
    }
    CHECK(value(a, "type_token_ratio") == value(b, "type_token_ratio"));
  }
  SECTION("language mismatch is refused") {
    CHECK_THROWS(psycholing_vector({"s", "gut", Language::de}, lex));
  }
}
