#pragma once

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "moodscreen/acoustic/feature_vector.hpp"
#include "moodscreen/audio/vad.hpp"
#include "moodscreen/core/error.hpp"
#include "moodscreen/core/text_io.hpp"
#include "moodscreen/corpus.hpp"
#include "moodscreen/evalreport.hpp"
#include "moodscreen/modeling/model.hpp"
#include "moodscreen/textfeat.hpp"

namespace moodscreen {

inline constexpr const char* kOutputRootEnv = "MOODSCREEN_OUTPUT_ROOT";

enum class Task { A, B, C_A, C_B };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::A: return "A";
    case Task::B: return "B";
    case Task::C_A: return "C_A";
    case Task::C_B: return "C_B";
  }
  return "?";
}

inline Task parse_task(const std::string& s) {
  if (s == "A") return Task::A;
  if (s == "B") return Task::B;
  if (s == "C_A") return Task::C_A;
  if (s == "C_B") return Task::C_B;
  throw ConfigError("unknown task '" + s + "' (expected A, B, C_A or C_B)");
}

inline bool uses_selection(Task t) { return t == Task::C_A || t == Task::C_B; }
inline bool cross_corpus(Task t) { return t == Task::B || t == Task::C_B; }

// per_corpus: impute and scale each corpus with statistics of all its rows.
// train_only: as per_corpus, but the training corpus is fit on its train split.
// none: impute with training medians, no scaling.
enum class Scaling { per_corpus, train_only, none };

inline const char* scaling_name(Scaling s) {
  switch (s) {
    case Scaling::per_corpus: return "per_corpus";
    case Scaling::train_only: return "train_only";
    case Scaling::none: return "none";
  }
  return "?";
}

inline Scaling parse_scaling(const std::string& s) {
  if (s == "per_corpus") return Scaling::per_corpus;
  if (s == "train_only") return Scaling::train_only;
  if (s == "none") return Scaling::none;
  throw ConfigError("unknown scaling '" + s + "' (expected per_corpus, train_only or none)");
}

struct RunConfig {
  Task task = Task::A;
  std::vector<std::string> manifests;
  std::string train_corpus;
  std::map<std::string, std::string> languages;  // corpus_id -> en|de
  std::map<std::string, std::string> lexicons;   // en|de -> path
  std::vector<FeatureSet> feature_sets{FeatureSet::praat,   FeatureSet::egemaps, FeatureSet::ser_dims,
                                       FeatureSet::wav2vec2, FeatureSet::roberta, FeatureSet::psycholing};
  std::vector<ModelFamily> model_families{ModelFamily::svm, ModelFamily::rf, ModelFamily::gbt};
  std::uint64_t seed = 42;
  std::size_t cv_folds = 5;
  std::size_t n_bootstrap = 1000;
  AggregationRule aggregation = AggregationRule::mean_score;
  Scaling scaling = Scaling::per_corpus;
  OversampleUnit oversample_unit = OversampleUnit::speaker;
  bool oversample = true;
  bool class_weights = true;
  VadConfig vad;
  bool apply_vad = true;
  int sample_rate = 16000;
  std::string output_dir = "out";
  std::string cache_dir;  // default: <output_dir>/cache
  std::size_t threads = 1;

  std::filesystem::path base_dir;  // directory of the config file; not serialized

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }

  std::filesystem::path output_path() const {
    std::filesystem::path out(output_dir);
    if (out.is_absolute()) return out;
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) return std::filesystem::path(root) / out;
    return resolve(output_dir);
  }

  std::filesystem::path cache_path() const {
    return cache_dir.empty() ? output_path() / "cache" : resolve(cache_dir);
  }

  Language language_of(const std::string& corpus) const {
    auto it = languages.find(corpus);
    return it == languages.end() ? Language::en : parse_language(it->second);
  }

  void validate(bool check_paths = true) const {
    if (manifests.empty()) throw ConfigError("config: no manifests given");
    if (train_corpus.empty()) throw ConfigError("config: train_corpus is required");
    if (feature_sets.empty()) throw ConfigError("config: feature_sets is empty");
    if (model_families.empty()) throw ConfigError("config: model_families is empty");
    if (cv_folds < 2) throw ConfigError("config: cv_folds must be at least 2");
    if (n_bootstrap == 0) throw ConfigError("config: n_bootstrap must be positive");
    if (sample_rate <= 0) throw ConfigError("config: sample_rate must be positive");
    vad.validate();
    std::set<FeatureSet> seen;
    for (auto s : feature_sets)
      if (!seen.insert(s).second) throw ConfigError(std::string("config: duplicate feature set ") + feature_set_name(s));
    for (const auto& [corpus, lang] : languages) (void)parse_language(lang);
    for (const auto& [lang, path] : lexicons) (void)parse_language(lang);
    if (!check_paths) return;
    for (const auto& m : manifests)
      if (!std::filesystem::exists(resolve(m))) throw ConfigError("config: manifest not found: " + resolve(m).string());
    if (std::find(feature_sets.begin(), feature_sets.end(), FeatureSet::psycholing) != feature_sets.end())
      for (const auto& [corpus, lang] : languages) {
        auto it = lexicons.find(lang);
        if (it == lexicons.end()) throw ConfigError("config: no lexicon for language '" + lang + "'");
        if (!std::filesystem::exists(resolve(it->second)))
          throw ConfigError("config: lexicon not found: " + resolve(it->second).string());
      }
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["task"] = task_name(c.task);
  j["manifests"] = c.manifests;
  j["train_corpus"] = c.train_corpus;
  j["languages"] = c.languages;
  j["lexicons"] = c.lexicons;
  std::vector<std::string> sets, fams;
  for (auto s : c.feature_sets) sets.push_back(feature_set_name(s));
  for (auto f : c.model_families) fams.push_back(family_name(f));
  j["feature_sets"] = sets;
  j["model_families"] = fams;
  j["seed"] = c.seed;
  j["cv_folds"] = c.cv_folds;
  j["n_bootstrap"] = c.n_bootstrap;
  j["aggregation"] = aggregation_name(c.aggregation);
  j["scaling"] = scaling_name(c.scaling);
  j["oversample_unit"] = c.oversample_unit == OversampleUnit::speaker ? "speaker" : "row";
  j["oversample"] = c.oversample;
  j["class_weights"] = c.class_weights;
  j["vad"] = {{"frame_ms", c.vad.frame_ms},
              {"hop_ms", c.vad.hop_ms},
              {"energy_threshold_db", c.vad.energy_threshold_db},
              {"min_speech_ms", c.vad.min_speech_ms},
              {"min_gap_ms", c.vad.min_gap_ms}};
  j["apply_vad"] = c.apply_vad;
  j["sample_rate"] = c.sample_rate;
  j["output_dir"] = c.output_dir;
  j["cache_dir"] = c.cache_dir;
  j["threads"] = c.threads;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  static const std::set<std::string> known{
      "task",        "manifests", "train_corpus", "languages",       "lexicons",   "feature_sets",
      "model_families", "seed",  "cv_folds",     "n_bootstrap",     "aggregation", "scaling",
      "oversample_unit", "oversample", "class_weights", "vad",     "apply_vad",  "sample_rate",
      "output_dir",  "cache_dir", "threads"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
  RunConfig c;
  c.base_dir = base_dir;
  try {
    if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
    if (j.contains("manifests")) c.manifests = j["manifests"].get<std::vector<std::string>>();
    if (j.contains("train_corpus")) c.train_corpus = j["train_corpus"].get<std::string>();
    if (j.contains("languages")) c.languages = j["languages"].get<std::map<std::string, std::string>>();
    if (j.contains("lexicons")) c.lexicons = j["lexicons"].get<std::map<std::string, std::string>>();
    if (j.contains("feature_sets")) {
      c.feature_sets.clear();
      for (const auto& s : j["feature_sets"]) c.feature_sets.push_back(parse_feature_set(s.get<std::string>()));
    }
    if (j.contains("model_families")) {
      c.model_families.clear();
      for (const auto& s : j["model_families"]) c.model_families.push_back(parse_family(s.get<std::string>()));
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("cv_folds")) c.cv_folds = j["cv_folds"].get<std::size_t>();
    if (j.contains("n_bootstrap")) c.n_bootstrap = j["n_bootstrap"].get<std::size_t>();
    if (j.contains("aggregation")) c.aggregation = parse_aggregation(j["aggregation"].get<std::string>());
    if (j.contains("scaling")) c.scaling = parse_scaling(j["scaling"].get<std::string>());
    if (j.contains("oversample_unit")) {
      const auto u = j["oversample_unit"].get<std::string>();
      if (u != "speaker" && u != "row") throw ConfigError("config: oversample_unit must be speaker or row");
      c.oversample_unit = u == "speaker" ? OversampleUnit::speaker : OversampleUnit::row;
    }
    if (j.contains("oversample")) c.oversample = j["oversample"].get<bool>();
    if (j.contains("class_weights")) c.class_weights = j["class_weights"].get<bool>();
    if (j.contains("vad")) {
      const auto& v = j["vad"];
      for (const auto& [key, _] : v.items())
        if (key != "frame_ms" && key != "hop_ms" && key != "energy_threshold_db" && key != "min_speech_ms" &&
            key != "min_gap_ms")
          throw ConfigError("config: unknown vad key '" + key + "'");
      c.vad.frame_ms = v.value("frame_ms", c.vad.frame_ms);
      c.vad.hop_ms = v.value("hop_ms", c.vad.hop_ms);
      c.vad.energy_threshold_db = v.value("energy_threshold_db", c.vad.energy_threshold_db);
      c.vad.min_speech_ms = v.value("min_speech_ms", c.vad.min_speech_ms);
      c.vad.min_gap_ms = v.value("min_gap_ms", c.vad.min_gap_ms);
    }
    if (j.contains("apply_vad")) c.apply_vad = j["apply_vad"].get<bool>();
    if (j.contains("sample_rate")) c.sample_rate = j["sample_rate"].get<int>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
    if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j, path.parent_path());
}

// Hash of the canonical config plus the bytes of every manifest it names, so
// equal hashes imply equal inputs. Threads and output locations are excluded.
inline std::string config_hash(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("threads");
  j.erase("output_dir");
  j.erase("cache_dir");
  Fnv1a h;
  h.update(j.dump());
  for (const auto& m : c.manifests) {
    const auto p = c.resolve(m);
    if (std::filesystem::exists(p)) h.update(read_file(p));
  }
  for (const auto& [lang, path] : c.lexicons) {
    const auto p = c.resolve(path);
    if (std::filesystem::exists(p)) h.update(read_file(p));
  }
  return h.hex();
}

}  // namespace moodscreen
