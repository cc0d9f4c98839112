#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "moodscreen/acoustic/feature_vector.hpp"
#include "moodscreen/core/error.hpp"
#include "moodscreen/core/text_io.hpp"

namespace moodscreen {

enum class Language { en, de };

inline const char* language_name(Language l) { return l == Language::en ? "en" : "de"; }
inline Language parse_language(const std::string& s) {
  if (s == "en") return Language::en;
  if (s == "de") return Language::de;
  throw ConfigError("unknown language '" + s + "'");
}

namespace utf8 {

// Decodes one code point; malformed bytes decode as U+FFFD and consume one byte.
inline char32_t next(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : (b0 & 0xF8) == 0xF0 ? 4 : 0;
  if (len == 0) {
    ++i;
    return 0xFFFD;
  }
  char32_t cp = b0 & (0x7F >> len);
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Simple case folding for Latin, Greek and Cyrillic blocks.
inline char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c == 0x178) return 0xFF;
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) return (c % 2 == 0) ? c + 1 : c;
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

inline bool is_word_char(char32_t c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) return true;
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  if (c >= 0x370 && c <= 0x3FF) return c != 0x37E && c != 0x387;
  if (c >= 0x400 && c <= 0x52F) return true;
  if (c >= 0x3040) return !(c >= 0x3000 && c <= 0x303F) && !(c >= 0xFF00 && c <= 0xFF20) && c != 0xFFFD;
  return false;
}

inline bool is_apostrophe(char32_t c) { return c == '\'' || c == 0x2019; }

inline std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) append(out, to_lower(next(s, i)));
  return out;
}

inline std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++n) next(s, i);
  return n;
}

}  // namespace utf8

struct Sentence {
  std::vector<std::string> tokens;
  char terminator = 0;  // '.', '!', '?' or 0 when the text ends without one
};

// Lowercased word tokens grouped into sentences split on '.', '!' and '?'.
// Apostrophes are kept only between word characters.
inline std::vector<Sentence> split_sentences(std::string_view text) {
  std::vector<Sentence> out;
  Sentence current;
  std::string word;
  auto flush_word = [&] {
    if (!word.empty()) current.tokens.push_back(std::move(word));
    word.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t c = utf8::next(text, i);
    if (utf8::is_word_char(c)) {
      utf8::append(word, utf8::to_lower(c));
    } else if (utf8::is_apostrophe(c) && !word.empty() && i < text.size()) {
      std::size_t j = i;
      if (utf8::is_word_char(utf8::next(text, j)))
        word += std::string(text.substr(at, i - at));
      else
        flush_word();
    } else {
      flush_word();
      if (c == '.' || c == '!' || c == '?') {
        if (!current.tokens.empty()) {
          current.terminator = static_cast<char>(c);
          out.push_back(std::move(current));
        } else if (!out.empty() && out.back().terminator == '.' && c != '.') {
          out.back().terminator = static_cast<char>(c);
        }
        current = Sentence{};
      }
    }
  }
  flush_word();
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& s : split_sentences(text))
    for (auto& t : s.tokens) out.push_back(std::move(t));
  return out;
}

enum class Tag : std::uint8_t { noun, verb, adjective, negation, positive, negative, subordinator };
inline constexpr std::array<Tag, 7> kTags{Tag::noun,     Tag::verb,     Tag::adjective,   Tag::negation,
                                          Tag::positive, Tag::negative, Tag::subordinator};

inline const char* tag_name(Tag t) {
  switch (t) {
    case Tag::noun: return "noun";
    case Tag::verb: return "verb";
    case Tag::adjective: return "adjective";
    case Tag::negation: return "negation";
    case Tag::positive: return "positive";
    case Tag::negative: return "negative";
    default: return "subordinator";
  }
}

inline std::optional<Tag> parse_tag(std::string_view s) {
  if (s == "positive-sentiment") return Tag::positive;
  if (s == "negative-sentiment") return Tag::negative;
  for (Tag t : kTags)
    if (s == tag_name(t)) return t;
  return std::nullopt;
}

class Lexicon {
public:
  Lexicon() = default;
  Lexicon(Language lang, std::unordered_map<std::string, std::uint8_t> entries)
      : language_(lang), entries_(std::move(entries)) {
    if (entries_.empty()) throw DataError("lexicon is empty");
  }

  // `word<TAB>tag[,tag...]` per line; '#' starts a comment line.
  static Lexicon parse(const std::vector<std::string>& lines, Language lang, const std::string& name = "<lexicon>") {
    std::unordered_map<std::string, std::uint8_t> entries;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto line = trim(lines[i]);
      if (line.empty() || line.front() == '#') continue;
      const auto cells = split(line, '\t');
      if (cells.size() != 2 || trim(cells[0]).empty())
        throw DataError(name + " line " + std::to_string(i + 1) + ": expected word<TAB>tags");
      std::uint8_t mask = 0;
      for (const auto& t : split(cells[1], ',')) {
        const auto tag = parse_tag(trim(t));
        if (!tag) throw DataError(name + " line " + std::to_string(i + 1) + ": unknown tag '" + t + "'");
        mask |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(*tag));
      }
      entries[utf8::lower(trim(cells[0]))] |= mask;
    }
    return Lexicon(lang, std::move(entries));
  }

  static Lexicon load(const std::filesystem::path& path, Language lang) {
    return parse(read_lines(path), lang, path.string());
  }

  Language language() const { return language_; }
  std::size_t size() const { return entries_.size(); }

  std::uint8_t tags(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? 0 : it->second;
  }
  bool contains(const std::string& word) const { return entries_.count(word) > 0; }
  static bool has(std::uint8_t mask, Tag t) { return (mask >> static_cast<unsigned>(t)) & 1u; }

  // Sorted words carrying the tag.
  std::vector<std::string> words_with(Tag t) const {
    std::vector<std::string> out;
    for (const auto& [w, m] : entries_)
      if (has(m, t)) out.push_back(w);
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  Language language_ = Language::en;
  std::unordered_map<std::string, std::uint8_t> entries_;
};

struct TranscriptSegment {
  std::string speaker_id;
  std::string text;
  Language language = Language::en;
};

inline constexpr std::size_t kPsycholingSize = 51;

// Proportion-based lexical and syntactic-complexity proxies. Names starting
// with `prop_` lie in [0, 1]; zero denominators give 0.
inline FeatureVector psycholing_vector(const TranscriptSegment& seg, const Lexicon& lex) {
  if (seg.language != lex.language())
    throw ValidationError(std::string("lexicon language ") + language_name(lex.language()) +
                          " does not match transcript language " + language_name(seg.language));
  const auto sentences = split_sentences(seg.text);
  std::vector<std::string> tokens;
  for (const auto& s : sentences) tokens.insert(tokens.end(), s.tokens.begin(), s.tokens.end());

  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  const double n_tok = static_cast<double>(tokens.size());
  const double n_sent = static_cast<double>(sentences.size());

  std::map<std::string, std::size_t> freq;
  for (const auto& t : tokens) ++freq[t];
  const double n_types = static_cast<double>(freq.size());
  double hapax = 0;
  for (const auto& [w, c] : freq) hapax += c == 1;

  std::vector<double> lengths;
  for (const auto& t : tokens) lengths.push_back(static_cast<double>(utf8::length(t)));
  double letters = 0, long_words = 0, short_words = 0;
  for (double l : lengths) {
    letters += l;
    long_words += l >= 7;
    short_words += l <= 3;
  }
  const double mean_len = ratio(letters, n_tok);
  double var_len = 0;
  for (double l : lengths) var_len += (l - mean_len) * (l - mean_len);
  var_len = ratio(var_len, n_tok);
  double max_sent = 0;
  for (const auto& s : sentences) max_sent = std::max(max_sent, static_cast<double>(s.tokens.size()));

  std::array<double, 7> tag_count{}, tag_types{};
  double oov = 0, content = 0;
  for (const auto& t : tokens) {
    const auto m = lex.tags(t);
    if (!lex.contains(t)) ++oov;
    for (Tag tag : kTags) tag_count[static_cast<std::size_t>(tag)] += Lexicon::has(m, tag);
    if (Lexicon::has(m, Tag::noun) || Lexicon::has(m, Tag::verb) || Lexicon::has(m, Tag::adjective)) ++content;
  }
  for (const auto& [w, c] : freq) {
    const auto m = lex.tags(w);
    for (Tag tag : kTags) tag_types[static_cast<std::size_t>(tag)] += Lexicon::has(m, tag);
  }
  double negated_positive = 0, questions = 0, exclamations = 0, subordinate_sentences = 0;
  for (const auto& s : sentences) {
    bool has_sub = false;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto m = lex.tags(s.tokens[i]);
      has_sub = has_sub || Lexicon::has(m, Tag::subordinator);
      if (i > 0 && Lexicon::has(m, Tag::positive) && Lexicon::has(lex.tags(s.tokens[i - 1]), Tag::negation))
        ++negated_positive;
    }
    questions += s.terminator == '?';
    exclamations += s.terminator == '!';
    subordinate_sentences += has_sub;
  }
  auto count = [&](Tag t) { return tag_count[static_cast<std::size_t>(t)]; };

  FeatureVector v;
  v.set = FeatureSet::psycholing;
  v.push("token_count", n_tok);
  v.push("type_count", n_types);
  v.push("sentence_count", n_sent);
  v.push("letter_count", letters);
  v.push("hapax_count", hapax);
  v.push("type_token_ratio", ratio(n_types, n_tok));
  v.push("hapax_ratio", ratio(hapax, n_types));
  v.push("mean_word_length", mean_len);
  v.push("word_length_sd", std::sqrt(var_len));
  v.push("mean_sentence_length", ratio(n_tok, n_sent));
  v.push("max_sentence_length", max_sent);
  v.push("prop_long_words", ratio(long_words, n_tok));
  v.push("prop_short_words", ratio(short_words, n_tok));
  for (Tag t : kTags) v.push(std::string("prop_") + tag_name(t), ratio(count(t), n_tok));
  for (Tag t : kTags) v.push(std::string("count_") + tag_name(t), count(t));
  for (Tag t : kTags) v.push(std::string(tag_name(t)) + "_per_sentence", ratio(count(t), n_sent));
  for (Tag t : kTags)
    v.push(std::string("prop_types_") + tag_name(t), ratio(tag_types[static_cast<std::size_t>(t)], n_types));
  const double pos = count(Tag::positive), neg = count(Tag::negative);
  v.push("prop_sentiment", ratio(pos + neg, n_tok));
  v.push("sentiment_balance", ratio(pos - neg, pos + neg));
  v.push("prop_noun_vs_verb", ratio(count(Tag::noun), count(Tag::noun) + count(Tag::verb)));
  v.push("prop_adjective_vs_noun", ratio(count(Tag::adjective), count(Tag::adjective) + count(Tag::noun)));
  v.push("prop_content_words", ratio(content, n_tok));
  v.push("prop_oov", ratio(oov, n_tok));
  v.push("prop_negated_positive", ratio(negated_positive, n_tok));
  v.push("prop_question_sentences", ratio(questions, n_sent));
  v.push("prop_exclamation_sentences", ratio(exclamations, n_sent));
  v.push("prop_subordinate_sentences", ratio(subordinate_sentences, n_sent));
  return v;
}

}  // namespace moodscreen
