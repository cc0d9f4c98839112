#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "moodscreen/acoustic/feature_sets.hpp"
#include "moodscreen/audio/resample.hpp"
#include "moodscreen/audio/vad.hpp"
#include "moodscreen/audio/wav.hpp"
#include "moodscreen/core/parallel.hpp"
#include "moodscreen/corpus.hpp"
#include "moodscreen/ingest.hpp"
#include "moodscreen/pipeline/config.hpp"
#include "moodscreen/textfeat.hpp"

namespace moodscreen {

inline constexpr const char* kExtractorVersion = "moodscreen-extract-1";

using Logger = std::function<void(const std::string&)>;

inline Logger stderr_logger() {
  return [](const std::string& msg) { std::cerr << msg << "\n"; };
}

// Ordered feature names of a set, independent of any data.
inline const std::vector<std::string>& feature_names(FeatureSet set) {
  static std::mutex mu;
  static std::map<FeatureSet, std::vector<std::string>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(set);
  if (it != cache.end()) return it->second;
  std::vector<std::string> names;
  if (is_sidecar_set(set)) {
    names = sidecar_names(set);
  } else if (set == FeatureSet::psycholing) {
    const Lexicon lex(Language::en, {{"x", 0}});
    names = psycholing_vector({"", "", Language::en}, lex).names;
  } else {
    AudioBuffer tone;
    tone.samples.resize(8000);
    for (std::size_t i = 0; i < tone.samples.size(); ++i)
      tone.samples[i] = 0.5 * std::sin(2 * std::numbers::pi * 150.0 * static_cast<double>(i) / 16000.0);
    const auto a = analyze_segment(tone);
    names = set == FeatureSet::praat ? praat_from(a).names : egemaps_from(a).names;
  }
  return cache.emplace(set, std::move(names)).first->second;
}

// Per-segment values of one feature set; NaN marks a missing value.
struct FeatureTable {
  FeatureSet set = FeatureSet::praat;
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> rows;  // segment_key -> values
  std::vector<std::string> excluded;                // segment keys with no data
  bool cache_hit = false;
};

struct VadRecord {
  std::string corpus_id, speaker_id, segment_key;
  double offset_s = 0.0;
  int sample_rate = 16000;
  std::vector<Segment> segments;
};

struct ExtractResult {
  std::map<FeatureSet, FeatureTable> tables;
  std::vector<VadRecord> vad;  // filled when acoustic sets were computed
};

inline std::string extraction_key(const RunConfig& cfg, FeatureSet set) {
  Fnv1a h;
  h.update(kExtractorVersion);
  h.update(feature_set_name(set));
  const auto j = to_json(cfg);
  if (set == FeatureSet::praat || set == FeatureSet::egemaps) {
    h.update(j["vad"].dump());
    h.update(j["apply_vad"].dump());
    h.update(std::to_string(cfg.sample_rate));
  }
  if (set == FeatureSet::psycholing) {
    h.update(j["languages"].dump());
    for (const auto& [lang, path] : cfg.lexicons) h.update(lang).update(read_file(cfg.resolve(path)));
  }
  for (const auto& m : cfg.manifests) h.update(read_file(cfg.resolve(m)));
  return h.hex();
}

namespace detail {

inline std::vector<double> to_row(const std::vector<std::optional<double>>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] ? *v[i] : kMissing;
  return out;
}

inline std::vector<std::optional<double>> from_row(const std::vector<double>& v) {
  std::vector<std::optional<double>> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!is_missing(v[i])) out[i] = v[i];
  return out;
}

// Speech of one manifest row: the row span, trimmed to VAD speech.
inline AudioBuffer speech_of(const AudioBuffer& file, const SegmentStub& seg, const RunConfig& cfg,
                             std::vector<Segment>* vad_out, double* offset_s) {
  const double start = seg.start_s.value_or(0.0);
  const double end = seg.end_s.value_or(file.duration_s());
  AudioBuffer span = file.slice_seconds(start, end);
  *offset_s = start;
  if (!cfg.apply_vad) {
    if (vad_out && span.size()) *vad_out = {{0, span.size()}};
    return span;
  }
  const auto segs = vad_segments(span, cfg.vad);
  if (vad_out) *vad_out = segs;
  return concat_segments(span, segs);
}

inline void compute_acoustic(const Manifest& manifest, const RunConfig& cfg, const std::vector<FeatureSet>& sets,
                             ExtractResult& result) {
  std::map<std::string, std::vector<std::size_t>> by_file;
  std::vector<std::string> file_order;
  for (std::size_t i = 0; i < manifest.segments.size(); ++i) {
    const auto& p = manifest.segments[i].audio_path;
    auto [it, inserted] = by_file.try_emplace(p.string());
    if (inserted) file_order.push_back(p.string());
    it->second.push_back(i);
  }
  const std::size_t n = manifest.segments.size();
  std::vector<std::optional<AcousticAnalysis>> analysis(n);
  std::vector<VadRecord> vad(n);
  parallel_for(file_order.size(), cfg.threads, [&](std::size_t f) {
    const auto& path = file_order[f];
    const auto& rows = by_file[path];
    if (path.empty()) return;
    if (!std::filesystem::exists(path)) throw DataError("audio file not found: " + path);
    const AudioBuffer file = resample(load_wav(path), cfg.sample_rate);
    for (std::size_t i : rows) {
      const auto& seg = manifest.segments[i];
      auto& rec = vad[i];
      rec.corpus_id = seg.corpus_id;
      rec.speaker_id = seg.speaker_id;
      rec.segment_key = seg.segment_key;
      rec.sample_rate = cfg.sample_rate;
      const AudioBuffer speech = speech_of(file, seg, cfg, &rec.segments, &rec.offset_s);
      if (speech.size() >= static_cast<std::size_t>(cfg.sample_rate / 10)) analysis[i] = analyze_segment(speech);
    }
  });
  for (auto set : sets) {
    auto& table = result.tables[set];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& key = manifest.segments[i].segment_key;
      if (!analysis[i]) {
        table.excluded.push_back(key);
        continue;
      }
      const auto v = set == FeatureSet::praat ? praat_from(*analysis[i]) : egemaps_from(*analysis[i]);
      table.rows[key] = to_row(v.values);
    }
  }
  for (auto& r : vad)
    if (!r.segment_key.empty()) result.vad.push_back(std::move(r));
}

inline void compute_psycholing(const Manifest& manifest, const RunConfig& cfg, FeatureTable& table) {
  std::map<Language, Lexicon> lexicons;
  for (const auto& [lang, path] : cfg.lexicons) {
    const auto l = parse_language(lang);
    lexicons.emplace(l, Lexicon::load(cfg.resolve(path), l));
  }
  for (const auto& seg : manifest.segments) {
    if (seg.transcript_path.empty() || !std::filesystem::exists(seg.transcript_path)) {
      table.excluded.push_back(seg.segment_key);
      continue;
    }
    const Language lang = cfg.language_of(seg.corpus_id);
    auto it = lexicons.find(lang);
    if (it == lexicons.end()) throw ConfigError(std::string("no lexicon configured for language ") + language_name(lang));
    const auto v = psycholing_vector({seg.speaker_id, read_file(seg.transcript_path), lang}, it->second);
    table.rows[seg.segment_key] = to_row(v.values);
  }
}

inline void read_sidecars(const Manifest& manifest, FeatureTable& table) {
  for (const auto& seg : manifest.segments) {
    const auto v = seg.sidecar_dir.empty() ? std::nullopt : read_sidecar(seg.sidecar_dir, seg.segment_key, table.set);
    if (!v) {
      table.excluded.push_back(seg.segment_key);
      continue;
    }
    table.rows[seg.segment_key] = v->values;
  }
}

inline bool load_cached(const std::filesystem::path& dir, const std::string& key, const Manifest& manifest,
                        FeatureTable& table, const Logger& log) {
  const auto key_file = dir / "cache_key";
  if (!std::filesystem::exists(key_file)) return false;
  if (trim(read_file(key_file)) != key) {
    log("extract " + std::string(feature_set_name(table.set)) + ": stale cache in " + dir.string() +
        " (inputs changed), recomputing");
    return false;
  }
  for (const auto& seg : manifest.segments) {
    const auto v = read_feature_file(dir, seg.segment_key, table.set, table.names.size());
    if (!v) {
      table.excluded.push_back(seg.segment_key);
      continue;
    }
    table.rows[seg.segment_key] = to_row(*v);
  }
  table.cache_hit = true;
  return true;
}

inline void store_cache(const std::filesystem::path& dir, const std::string& key, const FeatureTable& table) {
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (const auto& [seg_key, values] : table.rows) {
    FeatureVector v;
    v.set = table.set;
    v.values = from_row(values);
    write_feature_file(dir, seg_key, v);
  }
  std::string inventory;
  for (const auto& n : table.names) inventory += n + "\n";
  write_file(dir / "feature_names.txt", inventory);
  write_file(dir / "cache_key", key + "\n");
}

}  // namespace detail

// Features for every manifest row and requested set. Computed sets are cached
// per set under <cache>/<set>/ and keyed by a hash of everything they depend on.
inline ExtractResult extract_features(const Manifest& manifest, const RunConfig& cfg,
                                      const std::vector<FeatureSet>& sets, const Logger& log = stderr_logger()) {
  ExtractResult result;
  std::vector<FeatureSet> acoustic_todo;
  std::map<FeatureSet, std::string> keys;
  for (auto set : sets) {
    auto& table = result.tables[set];
    table.set = set;
    table.names = feature_names(set);
    if (is_sidecar_set(set)) {
      detail::read_sidecars(manifest, table);
      log("extract " + std::string(feature_set_name(set)) + ": ingested " + std::to_string(table.rows.size()) +
          " sidecars, " + std::to_string(table.excluded.size()) + " missing");
      continue;
    }
    keys[set] = extraction_key(cfg, set);
    const auto dir = cfg.cache_path() / feature_set_name(set);
    if (detail::load_cached(dir, keys[set], manifest, table, log)) {
      log("extract " + std::string(feature_set_name(set)) + ": cache hit (" + dir.string() + ")");
      continue;
    }
    table.rows.clear();
    table.excluded.clear();
    if (set == FeatureSet::psycholing) {
      const auto t0 = std::chrono::steady_clock::now();
      detail::compute_psycholing(manifest, cfg, table);
      detail::store_cache(dir, keys[set], table);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log("extract psycholing: computed " + std::to_string(table.rows.size()) + " segments in " + format_fixed(s, 2) +
          " s");
    } else {
      acoustic_todo.push_back(set);
    }
  }
  if (!acoustic_todo.empty()) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::compute_acoustic(manifest, cfg, acoustic_todo, result);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto set : acoustic_todo) {
      const auto& table = result.tables[set];
      detail::store_cache(cfg.cache_path() / feature_set_name(set), keys[set], table);
      log("extract " + std::string(feature_set_name(set)) + ": computed " + std::to_string(table.rows.size()) +
          " segments (" + std::to_string(table.excluded.size()) + " without speech) in " + format_fixed(s, 2) + " s");
    }
  }
  return result;
}

// VAD segment list, one line per detected speech region.
inline std::string vad_segments_tsv(const std::vector<VadRecord>& records) {
  std::string out = "speaker_id\tstart_s\tend_s\n";
  for (const auto& r : records) out += segments_tsv(r.speaker_id, r.segments, r.sample_rate, r.offset_s);
  return out;
}

// Expands every manifest row into one row per VAD speech region, with spans
// filled in; used to turn whole-recording manifests into segment manifests.
inline std::string segment_manifest(const std::filesystem::path& manifest_path, const RunConfig& cfg) {
  const auto lines = read_lines(manifest_path);
  const Manifest m = parse_manifest(lines, manifest_path.parent_path());
  std::map<std::size_t, std::string> line_text;
  for (std::size_t i = 1; i < lines.size(); ++i) line_text[i + 1] = lines[i];
  std::string out = lines.empty() ? "" : lines[0] + "\n";
  std::map<std::string, AudioBuffer> files;
  for (const auto& seg : m.segments) {
    auto cells = split(line_text[seg.line], '\t');
    cells[6] = seg.audio_path.string();
    auto it = files.find(seg.audio_path.string());
    if (it == files.end())
      it = files.emplace(seg.audio_path.string(), resample(load_wav(seg.audio_path), cfg.sample_rate)).first;
    const double start = seg.start_s.value_or(0.0);
    const AudioBuffer span = it->second.slice_seconds(start, seg.end_s.value_or(it->second.duration_s()));
    for (const auto& s : vad_segments(span, cfg.vad)) {
      cells[7] = format_fixed(start + static_cast<double>(s.start_sample) / cfg.sample_rate, 4);
      cells[8] = format_fixed(start + static_cast<double>(s.end_sample) / cfg.sample_rate, 4);
      for (std::size_t c = 0; c < cells.size(); ++c) out += (c ? "\t" : "") + cells[c];
      out += "\n";
    }
  }
  return out;
}

}  // namespace moodscreen
