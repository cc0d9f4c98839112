#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/rng.hpp"
#include "moodscreen/core/text_io.hpp"
#include "moodscreen/feature_matrix.hpp"

namespace moodscreen {

enum class Instrument { phq, bdi };
enum class Sex { female, male, unknown };
enum class Partition { train, dev, test };

inline int max_score(Instrument i) { return i == Instrument::phq ? 27 : 63; }
inline const char* instrument_name(Instrument i) { return i == Instrument::phq ? "PHQ" : "BDI"; }
inline const char* partition_name(Partition p) {
  switch (p) {
    case Partition::train: return "train";
    case Partition::dev: return "dev";
    default: return "test";
  }
}
inline const char* sex_name(Sex s) {
  switch (s) {
    case Sex::female: return "F";
    case Sex::male: return "M";
    default: return "unknown";
  }
}

struct QuestionnaireScore {
  Instrument instrument = Instrument::phq;
  int raw_score = 0;

  void validate() const {
    if (raw_score < 0 || raw_score > max_score(instrument))
      throw ValidationError(std::string(instrument_name(instrument)) + " score " +
                            std::to_string(raw_score) + " outside [0, " +
                            std::to_string(max_score(instrument)) + "]");
  }
  friend bool operator==(const QuestionnaireScore&, const QuestionnaireScore&) = default;
};

// PHQ: depression from 10 upwards. BDI: depression strictly above 19.
inline Label binarize_label(const QuestionnaireScore& score) {
  score.validate();
  if (score.instrument == Instrument::phq)
    return score.raw_score >= 10 ? Label::depression : Label::no_depression;
  return score.raw_score > 19 ? Label::depression : Label::no_depression;
}

struct SpeakerRecord {
  std::string speaker_id;
  std::string corpus_id;
  Sex sex = Sex::unknown;
  std::optional<QuestionnaireScore> score;
  std::optional<Label> label;  // present iff score is present
  std::optional<double> edss;  // descriptive metadata only
  Partition original_partition = Partition::train;
};

inline SpeakerRecord make_speaker(std::string corpus_id, std::string speaker_id, Sex sex,
                                  std::optional<QuestionnaireScore> score, Partition partition) {
  SpeakerRecord rec;
  rec.corpus_id = std::move(corpus_id);
  rec.speaker_id = std::move(speaker_id);
  rec.sex = sex;
  rec.score = score;
  if (score) rec.label = binarize_label(*score);
  rec.original_partition = partition;
  return rec;
}

// One manifest row: a speech segment to be featurized.
struct SegmentStub {
  std::string corpus_id;
  std::string speaker_id;
  std::string segment_key;
  std::filesystem::path audio_path;
  std::optional<double> start_s;
  std::optional<double> end_s;
  std::filesystem::path transcript_path;
  std::filesystem::path sidecar_dir;
  std::size_t line = 0;
};

struct Manifest {
  std::vector<SpeakerRecord> speakers;
  std::vector<SegmentStub> segments;
  std::size_t dropped_rows = 0;       // rows without a questionnaire score
  std::set<std::string> dropped_speakers;
};

inline const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> cols{
      "corpus_id",       "speaker_id",    "sex",     "instrument",
      "raw_score",       "original_partition", "audio_path", "segment_start_s",
      "segment_end_s",   "transcript_path", "sidecar_dir"};
  return cols;
}

inline std::string segment_key_for(const std::string& corpus, const std::string& speaker, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", ordinal);
  return corpus + "_" + speaker + "_" + buf;
}

namespace detail {

inline Sex parse_sex(const std::string& s, std::size_t line) {
  if (s == "F" || s == "f") return Sex::female;
  if (s == "M" || s == "m") return Sex::male;
  if (s.empty() || s == "unknown" || s == "U") return Sex::unknown;
  throw DataError("manifest line " + std::to_string(line) + ": bad sex '" + s + "'");
}

inline Partition parse_partition(const std::string& s, std::size_t line) {
  if (s == "train") return Partition::train;
  if (s == "dev" || s == "development") return Partition::dev;
  if (s == "test") return Partition::test;
  throw DataError("manifest line " + std::to_string(line) + ": bad original_partition '" + s + "'");
}

inline Instrument parse_instrument(const std::string& s, std::size_t line) {
  if (s == "PHQ" || s == "phq" || s == "PHQ-8" || s == "PHQ8") return Instrument::phq;
  if (s == "BDI" || s == "bdi" || s == "BDI-II") return Instrument::bdi;
  throw DataError("manifest line " + std::to_string(line) + ": bad instrument '" + s + "'");
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

// Tab-separated manifest, header row required, one row per segment with the
// speaker metadata repeated. An optional trailing `edss` column is accepted.
inline Manifest parse_manifest(const std::vector<std::string>& lines, const std::filesystem::path& base_dir) {
  if (lines.empty()) throw DataError("manifest is empty (header row required)");
  const auto header = split(lines[0], '\t');
  const auto& expected = manifest_columns();
  if (header.size() < expected.size() || !std::equal(expected.begin(), expected.end(), header.begin()))
    throw DataError("manifest line 1: header must start with the " + std::to_string(expected.size()) +
                    " standard columns in order");
  std::optional<std::size_t> edss_col;
  for (std::size_t c = expected.size(); c < header.size(); ++c)
    if (header[c] == "edss") edss_col = c;

  Manifest out;
  std::map<std::tuple<std::string, std::string, Partition>, std::size_t> record_index;
  std::map<std::pair<std::string, std::string>, std::size_t> first_line;
  std::map<std::pair<std::string, std::string>, std::size_t> ordinal;
  std::set<std::tuple<std::string, std::string, std::string, std::string, std::string>> seen_segments;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], '\t');
    if (cells.size() != header.size())
      throw DataError("manifest line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    const std::string& corpus = cells[0];
    const std::string& speaker = cells[1];
    if (corpus.empty() || speaker.empty())
      throw DataError("manifest line " + std::to_string(line_no) + ": empty corpus_id or speaker_id");

    if (trim(cells[4]).empty()) {
      ++out.dropped_rows;
      out.dropped_speakers.insert(corpus + "/" + speaker);
      continue;
    }
    const auto raw = parse_int(cells[4]);
    if (!raw) throw DataError("manifest line " + std::to_string(line_no) + ": raw_score is not an integer");
    QuestionnaireScore score{detail::parse_instrument(cells[3], line_no), static_cast<int>(*raw)};
    try {
      score.validate();
    } catch (const ValidationError& e) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    const Sex sex = detail::parse_sex(cells[2], line_no);
    const Partition part = detail::parse_partition(cells[5], line_no);
    std::optional<double> edss;
    if (edss_col && !trim(cells[*edss_col]).empty()) {
      edss = parse_double(cells[*edss_col]);
      if (!edss) throw DataError("manifest line " + std::to_string(line_no) + ": bad edss");
    }

    SpeakerRecord rec = make_speaker(corpus, speaker, sex, score, part);
    rec.edss = edss;
    const auto skey = std::make_pair(corpus, speaker);
    const auto rkey = std::make_tuple(corpus, speaker, part);
    if (auto it = record_index.find(rkey); it != record_index.end()) {
      const auto& prev = out.speakers[it->second];
      if (prev.sex != rec.sex || prev.score != rec.score || prev.edss != rec.edss)
        throw DataError("manifest line " + std::to_string(line_no) + ": duplicate speaker_id '" + speaker +
                        "' with conflicting metadata (first seen on line " +
                        std::to_string(first_line[skey]) + ")");
    } else {
      for (const auto& [k, idx] : record_index) {
        if (std::get<0>(k) == corpus && std::get<1>(k) == speaker) {
          const auto& prev = out.speakers[idx];
          if (prev.sex != rec.sex || prev.score != rec.score || prev.edss != rec.edss)
            throw DataError("manifest line " + std::to_string(line_no) + ": duplicate speaker_id '" + speaker +
                            "' with conflicting metadata");
        }
      }
      record_index.emplace(rkey, out.speakers.size());
      first_line.try_emplace(skey, line_no);
      out.speakers.push_back(std::move(rec));
    }

    const auto seg_id = std::make_tuple(corpus, speaker, cells[6], cells[7], cells[8]);
    // Rows without audio are sidecar-only segments identified by their ordinal.
    if (!cells[6].empty() && !seen_segments.insert(seg_id).second)
      throw DataError("manifest line " + std::to_string(line_no) + ": duplicate segment for speaker '" +
                      speaker + "'");

    SegmentStub seg;
    seg.corpus_id = corpus;
    seg.speaker_id = speaker;
    seg.segment_key = segment_key_for(corpus, speaker, ordinal[skey]++);
    seg.audio_path = detail::resolve(base_dir, cells[6]);
    seg.start_s = parse_double(cells[7]);
    seg.end_s = parse_double(cells[8]);
    if (!trim(cells[7]).empty() && !seg.start_s)
      throw DataError("manifest line " + std::to_string(line_no) + ": bad segment_start_s");
    if (!trim(cells[8]).empty() && !seg.end_s)
      throw DataError("manifest line " + std::to_string(line_no) + ": bad segment_end_s");
    if (seg.start_s && seg.end_s && *seg.end_s <= *seg.start_s)
      throw DataError("manifest line " + std::to_string(line_no) + ": segment end before start");
    seg.transcript_path = detail::resolve(base_dir, cells[9]);
    seg.sidecar_dir = detail::resolve(base_dir, cells[10]);
    seg.line = line_no;
    out.segments.push_back(std::move(seg));
  }
  return out;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_lines(path), path.parent_path());
}

inline void merge_manifest(Manifest& into, Manifest&& other) {
  for (auto& s : other.speakers) into.speakers.push_back(std::move(s));
  for (auto& s : other.segments) into.segments.push_back(std::move(s));
  into.dropped_rows += other.dropped_rows;
  into.dropped_speakers.merge(other.dropped_speakers);
}

enum class SplitName { train, test };

struct DatasetSplit {
  SplitName name = SplitName::train;
  std::string corpus_id;
  std::vector<std::string> speaker_ids;  // sorted, unique
};

struct SplitPolicy {
  std::string train_corpus;  // corpus whose train+dev form the training split
};

// Training corpus: train = original train ∪ dev, test = original test.
// Every other corpus becomes one whole-corpus test split.
inline std::vector<DatasetSplit> make_splits(const std::vector<SpeakerRecord>& records, const SplitPolicy& policy) {
  std::map<std::pair<std::string, std::string>, Partition> partition_of;
  for (const auto& r : records) {
    if (!r.label) continue;
    const auto key = std::make_pair(r.corpus_id, r.speaker_id);
    auto [it, inserted] = partition_of.emplace(key, r.original_partition);
    if (!inserted && it->second != r.original_partition)
      throw DataError("speaker '" + r.speaker_id + "' of corpus '" + r.corpus_id +
                      "' appears in multiple original partitions (" + partition_name(it->second) + ", " +
                      partition_name(r.original_partition) + ")");
  }
  DatasetSplit train{SplitName::train, policy.train_corpus, {}};
  DatasetSplit test{SplitName::test, policy.train_corpus, {}};
  std::map<std::string, DatasetSplit> others;
  for (const auto& [key, part] : partition_of) {
    const auto& [corpus, speaker] = key;
    if (corpus == policy.train_corpus) {
      (part == Partition::test ? test : train).speaker_ids.push_back(speaker);
    } else {
      auto [it, _] = others.try_emplace(corpus, DatasetSplit{SplitName::test, corpus, {}});
      it->second.speaker_ids.push_back(speaker);
    }
  }
  if (train.speaker_ids.empty())
    throw DataError("training corpus '" + policy.train_corpus + "' has no labeled train/dev speakers");
  std::vector<DatasetSplit> out{std::move(train)};
  if (!test.speaker_ids.empty()) out.push_back(std::move(test));
  for (auto& [_, split] : others) out.push_back(std::move(split));
  return out;
}

enum class OversampleUnit { speaker, row };

struct OversamplePlan {
  std::uint64_t seed = 42;
  OversampleUnit unit = OversampleUnit::speaker;
};

// Row indices of the balanced training set: every original row once, then the
// rows of minority units drawn with replacement until unit counts match.
inline std::vector<std::size_t> oversample_rows(const FeatureMatrix& m, const OversamplePlan& plan) {
  std::vector<std::vector<std::size_t>> units;
  std::vector<Label> unit_label;
  if (plan.unit == OversampleUnit::row) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      units.push_back({r});
      unit_label.push_back(m.labels[r]);
    }
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto [it, inserted] = index.try_emplace(m.speakers[r], units.size());
      if (inserted) {
        units.emplace_back();
        unit_label.push_back(m.labels[r]);
      } else if (unit_label[it->second] != m.labels[r]) {
        throw DataError("speaker '" + m.speakers[r] + "' has rows with different labels");
      }
      units[it->second].push_back(r);
    }
  }
  std::vector<std::size_t> pos_units, neg_units;
  for (std::size_t u = 0; u < units.size(); ++u)
    (unit_label[u] == Label::depression ? pos_units : neg_units).push_back(u);
  if (pos_units.empty() || neg_units.empty())
    throw DegenerateTaskError("oversampling needs both classes in the training data");

  std::vector<std::size_t> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = r;
  const auto& minority = pos_units.size() < neg_units.size() ? pos_units : neg_units;
  const std::size_t deficit = std::max(pos_units.size(), neg_units.size()) - minority.size();
  Rng rng(plan.seed);
  for (std::size_t k = 0; k < deficit; ++k) {
    const auto& rows = units[minority[rng.index(minority.size())]];
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

inline FeatureMatrix oversample(const FeatureMatrix& m, const OversamplePlan& plan) {
  const auto rows = oversample_rows(m, plan);
  return m.select_rows(rows);
}

}  // namespace moodscreen
