#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "moodscreen/core/error.hpp"
#include "moodscreen/core/quantile.hpp"

namespace moodscreen {

enum class Label : std::uint8_t { no_depression = 0, depression = 1 };

inline const char* label_name(Label l) {
  return l == Label::depression ? "depression" : "no_depression";
}

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

// Rows are segments, columns named features. Missing cells hold NaN until
// impute() is called; every modeling entry point rejects matrices with NaN.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::string> row_keys;
  std::vector<std::string> speakers;
  std::vector<Label> labels;
  std::vector<double> data;  // row-major

  std::size_t rows() const { return speakers.size(); }
  std::size_t cols() const { return names.size(); }

  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols(), cols()};
  }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
    return out;
  }

  void append_row(std::string key, std::string speaker, Label label, std::span<const double> values) {
    if (values.size() != cols()) throw DataError("row width mismatch for " + key);
    row_keys.push_back(std::move(key));
    speakers.push_back(std::move(speaker));
    labels.push_back(label);
    data.insert(data.end(), values.begin(), values.end());
  }

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.names = names;
    out.row_keys.reserve(indices.size());
    out.speakers.reserve(indices.size());
    out.labels.reserve(indices.size());
    out.data.reserve(indices.size() * cols());
    for (std::size_t r : indices) {
      out.row_keys.push_back(row_keys[r]);
      out.speakers.push_back(speakers[r]);
      out.labels.push_back(labels[r]);
      const auto src = row(r);
      out.data.insert(out.data.end(), src.begin(), src.end());
    }
    return out;
  }

  FeatureMatrix select_columns(std::span<const std::string> wanted) const {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < cols(); ++c) index.emplace(names[c], c);
    std::vector<std::size_t> src;
    for (const auto& w : wanted) {
      auto it = index.find(w);
      if (it == index.end()) throw DataError("feature not in matrix: " + w);
      src.push_back(it->second);
    }
    FeatureMatrix out;
    out.names.assign(wanted.begin(), wanted.end());
    out.row_keys = row_keys;
    out.speakers = speakers;
    out.labels = labels;
    out.data.resize(rows() * src.size());
    for (std::size_t r = 0; r < rows(); ++r)
      for (std::size_t c = 0; c < src.size(); ++c) out.data[r * src.size() + c] = at(r, src[c]);
    return out;
  }

  bool has_missing() const {
    return std::any_of(data.begin(), data.end(), [](double v) { return is_missing(v); });
  }

  // Per-column median over present values; columns with no values get 0.
  std::vector<double> column_medians() const {
    std::vector<double> out(cols(), 0.0);
    for (std::size_t c = 0; c < cols(); ++c) {
      std::vector<double> present;
      present.reserve(rows());
      for (std::size_t r = 0; r < rows(); ++r)
        if (!is_missing(at(r, c))) present.push_back(at(r, c));
      if (!present.empty()) out[c] = median(std::move(present));
    }
    return out;
  }

  void impute(std::span<const double> fill) {
    if (fill.size() != cols()) throw DataError("imputation vector width mismatch");
    for (std::size_t r = 0; r < rows(); ++r)
      for (std::size_t c = 0; c < cols(); ++c)
        if (is_missing(at(r, c))) at(r, c) = fill[c];
  }

  void require_complete(std::string_view context) const {
    if (has_missing()) throw DataError(std::string(context) + ": matrix contains missing values");
  }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
  }
};

// Mean of each column per speaker, in order of first appearance. Used for
// speaker-level statistics where every participant counts once.
inline FeatureMatrix speaker_means(const FeatureMatrix& m) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> rows_of;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto [it, inserted] = rows_of.try_emplace(m.speakers[r]);
    if (inserted) order.push_back(m.speakers[r]);
    it->second.push_back(r);
  }
  FeatureMatrix out;
  out.names = m.names;
  std::vector<double> acc(m.cols());
  std::vector<std::size_t> n(m.cols());
  for (const auto& spk : order) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(n.begin(), n.end(), 0);
    const auto& rows = rows_of[spk];
    for (std::size_t r : rows)
      for (std::size_t c = 0; c < m.cols(); ++c)
        if (!is_missing(m.at(r, c))) {
          acc[c] += m.at(r, c);
          ++n[c];
        }
    for (std::size_t c = 0; c < m.cols(); ++c) acc[c] = n[c] ? acc[c] / static_cast<double>(n[c]) : kMissing;
    out.append_row(spk, spk, m.labels[rows.front()], acc);
  }
  return out;
}

}  // namespace moodscreen
