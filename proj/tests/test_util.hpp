#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "moodscreen/feature_matrix.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 gen(std::random_device{}());
    path = std::filesystem::temp_directory_path() / ("moodscreen_" + tag + "_" + std::to_string(gen() % 1000000000));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Two-class matrix with `per_speaker` rows per speaker; depressed speakers
// get `shift` added to every column.
inline moodscreen::FeatureMatrix gaussian_matrix(std::size_t n_dep, std::size_t n_ctl, std::size_t dims,
                                                 std::size_t per_speaker, double shift, std::uint64_t seed) {
  using namespace moodscreen;
  FeatureMatrix m;
  for (std::size_t c = 0; c < dims; ++c) m.names.push_back("f" + std::to_string(c));
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t s = 0; s < n_dep + n_ctl; ++s) {
    const bool dep = s < n_dep;
    const std::string spk = (dep ? "d" : "c") + std::to_string(s);
    std::vector<double> centre(dims);
    for (auto& x : centre) x = 0.5 * noise(gen) + (dep ? shift : 0.0);
    for (std::size_t k = 0; k < per_speaker; ++k) {
      std::vector<double> row(dims);
      for (std::size_t c = 0; c < dims; ++c) row[c] = centre[c] + 0.5 * noise(gen);
      m.append_row(spk + "_" + std::to_string(k), spk, dep ? Label::depression : Label::no_depression, row);
    }
  }
  return m;
}

}  // namespace testutil
