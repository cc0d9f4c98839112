#pragma once

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "moodscreen/audio/wav.hpp"
#include "moodscreen/core/error.hpp"
#include "moodscreen/core/rng.hpp"
#include "moodscreen/core/text_io.hpp"
#include "moodscreen/corpus.hpp"
#include "moodscreen/ingest.hpp"
#include "moodscreen/pipeline/config.hpp"
#include "moodscreen/textfeat.hpp"

namespace moodscreen {

// Class effects planted in the generated data. Depression is the shifted
// class; shifts are depression minus control.
struct PlantedEffects {
  double valence_r = 0.0;        // target speaker-level Cohen r (valence lower); 0 = use valence_shift
  double valence_shift = 0.0;    // in speaker-mean SD units, positive = lower valence
  double arousal_shift = 0.0;    // SD units, positive = lower
  double dominance_shift = 0.0;  // SD units, positive = lower
  double f0_shift_hz = 0.0;
  double jitter_shift = 0.0;     // added relative period perturbation
  double negative_shift = 0.0;   // added probability of a negative sentiment word
  double embedding_shift = 0.0;  // SD units on the first kEmbeddingSignalDims dims
};

inline constexpr std::size_t kEmbeddingSignalDims = 16;

// Per-corpus marginal distortions applied to both classes alike.
struct CorpusMarginals {
  double ser_scale = 1.0;
  double ser_offset = 0.0;
  double gain_db = 0.0;
  double f0_offset_hz = 0.0;
  double embedding_offset = 0.0;
};

struct PartitionCounts {
  std::size_t speakers = 0;
  std::size_t depressed = 0;
};

struct CorpusSpec {
  std::string corpus_id;
  Instrument instrument = Instrument::phq;
  Language language = Language::en;
  PartitionCounts train, dev, test;
  CorpusMarginals marginals;
};

struct SynthSpec {
  std::vector<CorpusSpec> corpora;
  std::size_t segments_per_speaker = 20;
  double segment_s = 0.6;
  double gap_s = 0.4;
  int sample_rate = 16000;
  bool audio = true;
  bool transcripts = true;
  bool embeddings = false;
  PlantedEffects effects;
  std::uint64_t seed = 42;

  // Speaker counts of the two corpora in the study: 135 training speakers
  // (107 train + 28 dev, 42 depressed), 44 test (13), and a 50-speaker
  // second corpus (4) scored with BDI.
  static SynthSpec table1() {
    SynthSpec s;
    CorpusSpec a{"A", Instrument::phq, Language::en, {107, 33}, {28, 9}, {44, 13}, {}};
    CorpusSpec b{"B", Instrument::bdi, Language::de, {0, 0}, {0, 0}, {50, 4}, {}};
    s.corpora = {a, b};
    s.effects.valence_r = 0.66;
    return s;
  }

  static SynthSpec null_effects() {
    SynthSpec s = table1();
    s.effects = {};
    return s;
  }

  static SynthSpec separable() {
    SynthSpec s = table1();
    s.effects = {};
    s.effects.valence_shift = 4.0;
    s.effects.arousal_shift = 3.0;
    s.effects.dominance_shift = 3.0;
    s.effects.f0_shift_hz = -60.0;
    s.effects.jitter_shift = 0.02;
    s.effects.negative_shift = 0.5;
    s.effects.embedding_shift = 3.0;
    return s;
  }

  static SynthSpec preset(const std::string& name) {
    if (name == "table1") return table1();
    if (name == "null") return null_effects();
    if (name == "separable") return separable();
    throw ConfigError("unknown synth preset '" + name + "' (expected table1, null or separable)");
  }

  const CorpusSpec& train_corpus() const { return corpora.front(); }

  void validate() const {
    if (corpora.empty()) throw ConfigError("synth: no corpora");
    if (train_corpus().train.speakers + train_corpus().dev.speakers == 0)
      throw ConfigError("synth: the first corpus needs training speakers");
    for (const auto& c : corpora) {
      if (c.corpus_id.empty() || c.corpus_id.find_first_of("_/\t ") != std::string::npos)
        throw ConfigError("synth: corpus ids must be non-empty without '_', '/' or whitespace");
      for (const auto* p : {&c.train, &c.dev, &c.test})
        if (p->depressed > p->speakers) throw ConfigError("synth: more depressed speakers than speakers in " + c.corpus_id);
    }
    if (segments_per_speaker == 0) throw ConfigError("synth: segments_per_speaker must be positive");
    if (!(segment_s >= 0.3) || !(gap_s >= 0.35)) throw ConfigError("synth: need segment_s >= 0.3 and gap_s >= 0.35");
    if (sample_rate < 8000) throw ConfigError("synth: sample_rate must be at least 8000");
    if (effects.valence_r != 0.0 && effects.valence_shift != 0.0)
      throw ConfigError("synth: give either valence_r or valence_shift, not both");
    if (effects.valence_r < 0.0 || effects.valence_r >= 1.0) throw ConfigError("synth: valence_r must lie in [0, 1)");
  }
};

// Shift (in speaker-mean SD units) giving the target speaker-level Cohen r
// between n_a depressed and n_b control speakers: r maps to an AUC through
// the normal approximation of U, and a binormal shift d has AUC Phi(d/sqrt 2).
inline double valence_shift_for_r(double r, std::size_t n_a, std::size_t n_b) {
  if (r == 0.0) return 0.0;
  const double N = static_cast<double>(n_a + n_b);
  const double auc = 0.5 + r * std::sqrt(N * (N + 1) / (12.0 * static_cast<double>(n_a) * static_cast<double>(n_b)));
  if (auc >= 1.0) throw ConfigError("synth: valence_r " + format_double(r) + " is unreachable at these class sizes");
  const boost::math::normal_distribution<double> unit;
  return std::sqrt(2.0) * boost::math::quantile(unit, auc);
}

struct SynthSpeaker {
  std::string corpus_id, speaker_id;
  Partition partition = Partition::train;
  Label label = Label::no_depression;
  Sex sex = Sex::female;
  int score = 0;
  std::optional<double> edss;
};

inline constexpr double kSerCentre = 0.5;
inline constexpr double kSerSpread = 0.08;      // between-speaker SD of SER dims
inline constexpr double kSerWithin = 0.5;       // within-speaker SD relative to kSerSpread

namespace detail {

inline int draw_score(Instrument inst, Label l, Rng& rng) {
  if (inst == Instrument::phq)
    return l == Label::depression ? 10 + static_cast<int>(rng.index(18)) : static_cast<int>(rng.index(10));
  return l == Label::depression ? 20 + static_cast<int>(rng.index(44)) : static_cast<int>(rng.index(20));
}

inline std::vector<SynthSpeaker> roster(const SynthSpec& spec) {
  std::vector<SynthSpeaker> out;
  for (std::size_t ci = 0; ci < spec.corpora.size(); ++ci) {
    const auto& c = spec.corpora[ci];
    std::string prefix(1, static_cast<char>(std::tolower(static_cast<unsigned char>(c.corpus_id.front()))));
    std::size_t ordinal = 0;
    Rng rng = Rng::derive(spec.seed, 900 + ci);
    const std::array<std::pair<Partition, PartitionCounts>, 3> parts{
        {{Partition::train, c.train}, {Partition::dev, c.dev}, {Partition::test, c.test}}};
    for (const auto& [part, counts] : parts) {
      std::vector<Label> labels(counts.speakers, Label::no_depression);
      for (std::size_t i = 0; i < counts.depressed; ++i) labels[i] = Label::depression;
      rng.shuffle(labels.begin(), labels.end());
      for (Label l : labels) {
        SynthSpeaker s;
        s.corpus_id = c.corpus_id;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%03zu", ++ordinal);
        s.speaker_id = prefix + buf;
        s.partition = part;
        s.label = l;
        s.sex = rng.uniform() < 0.5 ? Sex::female : Sex::male;
        s.score = draw_score(c.instrument, l, rng);
        if (c.instrument == Instrument::bdi) s.edss = 0.5 * static_cast<double>(rng.index(15));
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace detail

// In-memory SER dimensions: rows[speaker][segment] = {arousal, valence, dominance}.
struct SerDraw {
  std::vector<SynthSpeaker> speakers;
  std::vector<std::vector<std::array<double, 3>>> values;
  double valence_shift = 0.0;
};

inline SerDraw draw_ser(const SynthSpec& spec) {
  spec.validate();
  SerDraw d;
  d.speakers = detail::roster(spec);
  std::size_t n_dep = 0, n_ctl = 0;
  for (const auto& s : d.speakers)
    if (s.corpus_id == spec.train_corpus().corpus_id && s.partition != Partition::test)
      (s.label == Label::depression ? n_dep : n_ctl) += 1;
  const double within = kSerWithin / std::sqrt(static_cast<double>(spec.segments_per_speaker));
  const double mean_sd = std::sqrt(1.0 + within * within);
  d.valence_shift = spec.effects.valence_r > 0 ? valence_shift_for_r(spec.effects.valence_r, n_dep, n_ctl) * mean_sd
                                               : spec.effects.valence_shift;
  const std::array<double, 3> shift{spec.effects.arousal_shift, d.valence_shift, spec.effects.dominance_shift};
  for (std::size_t i = 0; i < d.speakers.size(); ++i) {
    const auto& s = d.speakers[i];
    const CorpusSpec* corpus = nullptr;
    for (const auto& c : spec.corpora)
      if (c.corpus_id == s.corpus_id) corpus = &c;
    Rng rng = Rng::derive(spec.seed, 10000 + i);
    std::array<double, 3> mu{};
    for (std::size_t k = 0; k < 3; ++k)
      mu[k] = rng.normal() - (s.label == Label::depression ? shift[k] : 0.0);
    std::vector<std::array<double, 3>> segs(spec.segments_per_speaker);
    for (auto& seg : segs)
      for (std::size_t k = 0; k < 3; ++k) {
        const double v = kSerCentre + kSerSpread * (mu[k] + kSerWithin * rng.normal());
        seg[k] = corpus->marginals.ser_scale * (v - kSerCentre) + kSerCentre + corpus->marginals.ser_offset;
      }
    d.values.push_back(std::move(segs));
  }
  return d;
}

namespace detail {

struct Resonator {
  double b0 = 0, a1 = 0, a2 = 0, y1 = 0, y2 = 0;
  Resonator(double freq, double bw, double fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    a1 = 2 * r * std::cos(2 * std::numbers::pi * freq / fs);
    a2 = -r * r;
    b0 = 1 - r;
  }
  double step(double x) {
    const double y = b0 * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

inline constexpr std::array<std::array<double, 3>, 5> kVowels{{{730, 1090, 2440},
                                                               {530, 1840, 2480},
                                                               {270, 2290, 3010},
                                                               {570, 840, 2410},
                                                               {300, 870, 2240}}};

// One voiced segment: a jittered glottal pulse train through three formant
// resonators, with 20 ms onset/offset ramps.
inline std::vector<double> voiced_segment(double f0, double jitter, double shimmer, double amplitude,
                                          std::size_t vowel, std::size_t n, int fs, Rng& rng) {
  std::vector<double> src(n, 0.0);
  const double sigma = jitter / 1.1284;  // E|e_k - e_(k-1)| = 2 sigma / sqrt(pi)
  double t = rng.uniform(0.0, 1.0 / f0);
  while (true) {
    const double pos = t * fs;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 16 >= n) break;
    const double amp = 1.0 + shimmer * rng.normal();
    // Band-limited fractional delay keeps the sample grid from adding its own jitter.
    const double frac = pos - static_cast<double>(k);
    for (int j = -7; j <= 8; ++j) {
      if (static_cast<long>(k) + j < 0) continue;
      const double d = static_cast<double>(j) - frac;
      const double w = d == 0.0 ? 1.0 : std::sin(std::numbers::pi * d) / (std::numbers::pi * d);
      src[k + j] += amp * w * (0.5 + 0.5 * std::cos(std::numbers::pi * d / 8.0));
    }
    t += (1.0 / f0) * (1.0 + sigma * rng.normal());
  }
  std::vector<double> out(n);
  const auto& fm = kVowels[vowel % kVowels.size()];
  Resonator r1(fm[0], 80, fs), r2(fm[1], 100, fs), r3(fm[2], 140, fs);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = src[i] + 0.002 * rng.normal();
    out[i] = r1.step(x) + 0.6 * r2.step(x) + 0.3 * r3.step(x);
  }
  double peak = 1e-12;
  for (double v : out) peak = std::max(peak, std::abs(v));
  const std::size_t ramp = static_cast<std::size_t>(0.02 * fs);
  for (std::size_t i = 0; i < n; ++i) {
    double g = 1.0;
    if (i < ramp) g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(ramp));
    if (n - 1 - i < ramp)
      g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n - 1 - i) / static_cast<double>(ramp));
    out[i] *= amplitude * g / peak;
  }
  return out;
}

struct TextPools {
  std::vector<std::string> noun, verb, adjective, negation, positive, negative, subordinator;
  explicit TextPools(const Lexicon& lex)
      : noun(lex.words_with(Tag::noun)),
        verb(lex.words_with(Tag::verb)),
        adjective(lex.words_with(Tag::adjective)),
        negation(lex.words_with(Tag::negation)),
        positive(lex.words_with(Tag::positive)),
        negative(lex.words_with(Tag::negative)),
        subordinator(lex.words_with(Tag::subordinator)) {
    for (const auto* pool : {&noun, &verb, &adjective, &negation, &positive, &negative, &subordinator})
      if (pool->empty()) throw ConfigError("synth: lexicon lacks words for some tag");
  }
};

inline std::string transcript(Language lang, const TextPools& pools, double p_negative, Rng& rng) {
  static const std::vector<std::string> en{"i {V} the {N} {S} it was {P}.", "my {N} is {A} and {P}.",
                                           "we {V} at the {N} {S} the {N} was {P}.", "it was a {A} {N}.",
                                           "did you {V} the {N}?", "the {N} was {P}!"};
  static const std::vector<std::string> de{"ich {V} das {N} {S} es {P} war.", "mein {N} ist {A} und {P}.",
                                           "wir {V} am {N} {S} der {N} {P} war.", "es war ein {A} {N}.",
                                           "hast du das {N}?", "der {N} war {P}!"};
  const auto& templates = lang == Language::en ? en : de;
  auto pick = [&](const std::vector<std::string>& pool) { return pool[rng.index(pool.size())]; };
  std::string out;
  const std::size_t n_sent = 1 + rng.index(2);
  for (std::size_t s = 0; s < n_sent; ++s) {
    const std::string& tpl = templates[rng.index(templates.size())];
    std::string sent;
    for (std::size_t i = 0; i < tpl.size(); ++i) {
      if (tpl[i] == '{' && i + 2 < tpl.size() && tpl[i + 2] == '}') {
        switch (tpl[i + 1]) {
          case 'N': sent += pick(pools.noun); break;
          case 'V': sent += pick(pools.verb); break;
          case 'A': sent += pick(pools.adjective); break;
          case 'S': sent += pick(pools.subordinator); break;
          case 'P':
            if (rng.uniform() < p_negative) {
              sent += pick(pools.negative);
            } else {
              if (rng.uniform() < 0.1) sent += pick(pools.negation) + " ";
              sent += pick(pools.positive);
            }
            break;
        }
        i += 2;
      } else {
        sent.push_back(tpl[i]);
      }
    }
    if (!out.empty()) out.push_back(' ');
    sent[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sent[0])));
    out += sent;
  }
  return out + "\n";
}

}  // namespace detail

inline nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["segments_per_speaker"] = s.segments_per_speaker;
  j["segment_s"] = s.segment_s;
  j["gap_s"] = s.gap_s;
  j["sample_rate"] = s.sample_rate;
  j["audio"] = s.audio;
  j["transcripts"] = s.transcripts;
  j["embeddings"] = s.embeddings;
  const auto& e = s.effects;
  j["effects"] = {{"valence_r", e.valence_r},         {"valence_shift", e.valence_shift},
                  {"arousal_shift", e.arousal_shift}, {"dominance_shift", e.dominance_shift},
                  {"f0_shift_hz", e.f0_shift_hz},     {"jitter_shift", e.jitter_shift},
                  {"negative_shift", e.negative_shift}, {"embedding_shift", e.embedding_shift}};
  j["corpora"] = nlohmann::json::array();
  for (const auto& c : s.corpora) {
    auto counts = [](const PartitionCounts& p) { return nlohmann::json{{"speakers", p.speakers}, {"depressed", p.depressed}}; };
    const auto& m = c.marginals;
    j["corpora"].push_back({{"corpus_id", c.corpus_id},
                            {"instrument", instrument_name(c.instrument)},
                            {"language", language_name(c.language)},
                            {"train", counts(c.train)},
                            {"dev", counts(c.dev)},
                            {"test", counts(c.test)},
                            {"marginals",
                             {{"ser_scale", m.ser_scale},
                              {"ser_offset", m.ser_offset},
                              {"gain_db", m.gain_db},
                              {"f0_offset_hz", m.f0_offset_hz},
                              {"embedding_offset", m.embedding_offset}}}});
  }
  return j;
}

// Starts from j["preset"] (default table1) and overrides the given keys.
inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  try {
    SynthSpec s = SynthSpec::preset(j.value("preset", std::string("table1")));
    s.seed = j.value("seed", s.seed);
    s.segments_per_speaker = j.value("segments_per_speaker", s.segments_per_speaker);
    s.segment_s = j.value("segment_s", s.segment_s);
    s.gap_s = j.value("gap_s", s.gap_s);
    s.sample_rate = j.value("sample_rate", s.sample_rate);
    s.audio = j.value("audio", s.audio);
    s.transcripts = j.value("transcripts", s.transcripts);
    s.embeddings = j.value("embeddings", s.embeddings);
    if (j.contains("effects")) {
      const auto& e = j["effects"];
      auto& x = s.effects;
      x.valence_r = e.value("valence_r", x.valence_r);
      x.valence_shift = e.value("valence_shift", x.valence_shift);
      x.arousal_shift = e.value("arousal_shift", x.arousal_shift);
      x.dominance_shift = e.value("dominance_shift", x.dominance_shift);
      x.f0_shift_hz = e.value("f0_shift_hz", x.f0_shift_hz);
      x.jitter_shift = e.value("jitter_shift", x.jitter_shift);
      x.negative_shift = e.value("negative_shift", x.negative_shift);
      x.embedding_shift = e.value("embedding_shift", x.embedding_shift);
    }
    if (j.contains("corpora")) {
      s.corpora.clear();
      for (const auto& c : j["corpora"]) {
        CorpusSpec cs;
        cs.corpus_id = c.at("corpus_id").get<std::string>();
        cs.instrument = detail::parse_instrument(c.value("instrument", std::string("PHQ")), 0);
        cs.language = parse_language(c.value("language", std::string("en")));
        auto counts = [&](const char* key) {
          PartitionCounts p;
          if (c.contains(key)) {
            p.speakers = c[key].value("speakers", std::size_t{0});
            p.depressed = c[key].value("depressed", std::size_t{0});
          }
          return p;
        };
        cs.train = counts("train");
        cs.dev = counts("dev");
        cs.test = counts("test");
        if (c.contains("marginals")) {
          const auto& m = c["marginals"];
          cs.marginals.ser_scale = m.value("ser_scale", 1.0);
          cs.marginals.ser_offset = m.value("ser_offset", 0.0);
          cs.marginals.gain_db = m.value("gain_db", 0.0);
          cs.marginals.f0_offset_hz = m.value("f0_offset_hz", 0.0);
          cs.marginals.embedding_offset = m.value("embedding_offset", 0.0);
        }
        s.corpora.push_back(std::move(cs));
      }
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
}

struct SynthOutput {
  std::filesystem::path dir;
  std::vector<std::filesystem::path> manifests;
  std::filesystem::path config;
  nlohmann::json ground_truth;
};

// Writes manifests, audio, transcripts, sidecars, lexicon copies, a run
// config and ground_truth.json under out_dir.
inline SynthOutput synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                const std::filesystem::path& lexicon_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  SynthOutput out;
  out.dir = out_dir;
  const SerDraw ser = draw_ser(spec);

  std::map<Language, Lexicon> lexicons;
  std::map<Language, std::unique_ptr<detail::TextPools>> pools;
  if (spec.transcripts)
    for (Language lang : {Language::en, Language::de}) {
      const std::string file = std::string("lexicon_") + language_name(lang) + ".tsv";
      if (!fs::exists(lexicon_dir / file)) throw ConfigError("synth: lexicon not found: " + (lexicon_dir / file).string());
      write_file(out_dir / file, read_file(lexicon_dir / file));
      lexicons.emplace(lang, Lexicon::load(out_dir / file, lang));
      pools[lang] = std::make_unique<detail::TextPools>(lexicons.at(lang));
    }

  const int fs_rate = spec.sample_rate;
  const auto seg_n = static_cast<std::size_t>(spec.segment_s * fs_rate);
  const auto gap_n = static_cast<std::size_t>(spec.gap_s * fs_rate);
  std::map<std::string, std::string> manifest_text;
  std::map<std::string, std::vector<std::pair<std::string, FeatureSet>>> index_entries;
  std::string header;
  for (std::size_t c = 0; c < manifest_columns().size(); ++c) header += (c ? "\t" : "") + manifest_columns()[c];
  for (std::size_t i = 0; i < ser.speakers.size(); ++i) {
    const auto& s = ser.speakers[i];
    const CorpusSpec* corpus = nullptr;
    for (const auto& c : spec.corpora)
      if (c.corpus_id == s.corpus_id) corpus = &c;
    auto& text = manifest_text[s.corpus_id];
    if (text.empty()) text = header + (corpus->instrument == Instrument::bdi ? "\tedss\n" : "\n");
    const fs::path cdir = out_dir / s.corpus_id;
    const bool dep = s.label == Label::depression;

    Rng audio_rng = Rng::derive(spec.seed, 20000 + i);
    Rng text_rng = Rng::derive(spec.seed, 30000 + i);
    Rng emb_rng = Rng::derive(spec.seed, 40000 + i);
    const double f0 = (s.sex == Sex::male ? 115.0 : 205.0) + 12.0 * audio_rng.normal() +
                      (dep ? spec.effects.f0_shift_hz : 0.0) + corpus->marginals.f0_offset_hz;
    const double jitter = std::max(0.0, 0.004 + 0.001 * audio_rng.normal() + (dep ? spec.effects.jitter_shift : 0.0));
    const double amplitude = 0.3 * std::pow(10.0, (corpus->marginals.gain_db + 2.0 * audio_rng.normal()) / 20.0);
    std::vector<double> wav;
    if (spec.audio) wav.assign(gap_n, 0.0);

    std::vector<std::vector<double>> emb_base;
    if (spec.embeddings)
      for (FeatureSet set : {FeatureSet::wav2vec2, FeatureSet::roberta}) {
        std::vector<double> base(sidecar_dim(set));
        for (std::size_t k = 0; k < base.size(); ++k)
          base[k] = emb_rng.normal() + corpus->marginals.embedding_offset -
                    (dep && k < kEmbeddingSignalDims ? spec.effects.embedding_shift : 0.0);
        emb_base.push_back(std::move(base));
      }

    for (std::size_t k = 0; k < spec.segments_per_speaker; ++k) {
      const std::string key = segment_key_for(s.corpus_id, s.speaker_id, k);
      std::string start, end, audio_rel, transcript_rel;
      if (spec.audio) {
        const double t0 = static_cast<double>(wav.size()) / fs_rate;
        const double f0_seg = f0 * (1.0 + 0.02 * audio_rng.normal());
        auto voiced = detail::voiced_segment(f0_seg, jitter, 0.04, amplitude, k, seg_n, fs_rate, audio_rng);
        wav.insert(wav.end(), voiced.begin(), voiced.end());
        wav.insert(wav.end(), gap_n, 0.0);
        start = format_fixed(std::max(0.0, t0 - spec.gap_s / 2), 4);
        end = format_fixed(t0 + spec.segment_s + spec.gap_s / 2, 4);
        audio_rel = s.corpus_id + "/audio/" + s.speaker_id + ".wav";
      }
      if (spec.transcripts) {
        const double p_neg = std::clamp(0.3 + (dep ? spec.effects.negative_shift : 0.0), 0.0, 1.0);
        transcript_rel = s.corpus_id + "/transcripts/" + key + ".txt";
        write_file(out_dir / transcript_rel,
                   detail::transcript(corpus->language, *pools.at(corpus->language), p_neg, text_rng));
      }
      const auto& v = ser.values[i][k];
      write_sidecar(cdir / "sidecars", key, {FeatureSet::ser_dims, {v[0], v[1], v[2]}});
      index_entries[s.corpus_id].push_back({key, FeatureSet::ser_dims});
      if (spec.embeddings) {
        std::size_t b = 0;
        for (FeatureSet set : {FeatureSet::wav2vec2, FeatureSet::roberta}) {
          SidecarVector e{set, emb_base[b++]};
          for (auto& x : e.values) x += 0.5 * emb_rng.normal();
          write_sidecar(cdir / "sidecars", key, e);
          index_entries[s.corpus_id].push_back({key, set});
        }
      }
      const std::vector<std::string> cells{s.corpus_id,
                                           s.speaker_id,
                                           s.sex == Sex::male ? "M" : "F",
                                           instrument_name(corpus->instrument),
                                           std::to_string(s.score),
                                           partition_name(s.partition),
                                           audio_rel,
                                           start,
                                           end,
                                           transcript_rel,
                                           s.corpus_id + "/sidecars"};
      for (std::size_t c = 0; c < cells.size(); ++c) text += (c ? "\t" : "") + cells[c];
      if (corpus->instrument == Instrument::bdi) text += "\t" + (s.edss ? format_fixed(*s.edss, 1) : "");
      text += "\n";
    }
    if (spec.audio) {
      for (auto& x : wav) x += 1e-4 * audio_rng.normal();
      save_wav(cdir / "audio" / (s.speaker_id + ".wav"), AudioBuffer{std::move(wav), fs_rate});
    }
  }
  for (const auto& [corpus, text] : manifest_text) {
    const auto path = out_dir / ("manifest_" + corpus + ".tsv");
    write_file(path, text);
    out.manifests.push_back(path);
    write_sidecar_index(out_dir / corpus / "sidecars", index_entries[corpus]);
  }

  RunConfig cfg;
  for (const auto& m : out.manifests) cfg.manifests.push_back(m.filename().string());
  cfg.train_corpus = spec.train_corpus().corpus_id;
  for (const auto& c : spec.corpora) cfg.languages[c.corpus_id] = language_name(c.language);
  cfg.feature_sets.clear();
  if (spec.audio) cfg.feature_sets = {FeatureSet::praat, FeatureSet::egemaps};
  cfg.feature_sets.push_back(FeatureSet::ser_dims);
  if (spec.embeddings) {
    cfg.feature_sets.push_back(FeatureSet::wav2vec2);
    cfg.feature_sets.push_back(FeatureSet::roberta);
  }
  if (spec.transcripts) {
    cfg.feature_sets.push_back(FeatureSet::psycholing);
    cfg.lexicons = {{"en", "lexicon_en.tsv"}, {"de", "lexicon_de.tsv"}};
  }
  cfg.seed = spec.seed;
  out.config = out_dir / "config.json";
  write_file(out.config, to_json(cfg).dump(2) + "\n");

  auto& gt = out.ground_truth;
  gt["spec"] = to_json(spec);
  gt["seed"] = spec.seed;
  gt["segments_per_speaker"] = spec.segments_per_speaker;
  gt["valence_target_r"] = spec.effects.valence_r;
  gt["valence_shift_sd"] = ser.valence_shift;
  gt["effects"] = {{"valence_shift_sd", ser.valence_shift},
                   {"arousal_shift_sd", spec.effects.arousal_shift},
                   {"dominance_shift_sd", spec.effects.dominance_shift},
                   {"f0_shift_hz", spec.effects.f0_shift_hz},
                   {"jitter_shift", spec.effects.jitter_shift},
                   {"negative_word_shift", spec.effects.negative_shift},
                   {"embedding_shift_sd", spec.effects.embedding_shift}};
  nlohmann::json planted = nlohmann::json::object();
  std::vector<std::string> ser_planted;
  if (spec.effects.arousal_shift != 0) ser_planted.push_back("arousal");
  if (ser.valence_shift != 0) ser_planted.push_back("valence");
  if (spec.effects.dominance_shift != 0) ser_planted.push_back("dominance");
  planted["ser_dims"] = ser_planted;
  if (spec.audio && (spec.effects.f0_shift_hz != 0 || spec.effects.jitter_shift != 0)) {
    std::vector<std::string> p;
    if (spec.effects.f0_shift_hz != 0) p.push_back("f0_mean_hz");
    if (spec.effects.jitter_shift != 0) p.push_back("jitter_local");
    planted["praat"] = p;
  }
  if (spec.transcripts && spec.effects.negative_shift != 0)
    planted["psycholing"] = std::vector<std::string>{"prop_negative", "prop_positive"};
  if (spec.embeddings && spec.effects.embedding_shift != 0) {
    std::vector<std::string> w, r;
    for (std::size_t k = 0; k < kEmbeddingSignalDims; ++k) {
      w.push_back(sidecar_names(FeatureSet::wav2vec2)[k]);
      r.push_back(sidecar_names(FeatureSet::roberta)[k]);
    }
    planted["wav2vec2"] = w;
    planted["roberta"] = r;
  }
  gt["planted_features"] = planted;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& s : ser.speakers) {
    auto& slot = counts[s.corpus_id][partition_name(s.partition)][label_name(s.label)];
    slot = slot.is_null() ? 1 : slot.get<int>() + 1;
  }
  gt["counts"] = counts;
  write_file(out_dir / "ground_truth.json", gt.dump(2) + "\n");
  return out;
}

}  // namespace moodscreen
