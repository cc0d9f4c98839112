#pragma once

#include <span>

#include "moodscreen/core/error.hpp"
#include "moodscreen/feature_matrix.hpp"

namespace moodscreen {

struct ClassWeights {
  double no_depression = 1.0;
  double depression = 1.0;

  double of(Label l) const { return l == Label::depression ? depression : no_depression; }
  bool operator==(const ClassWeights&) const = default;
};

// Balanced scheme: n_total / (2 * n_c).
inline ClassWeights class_weights(std::span<const Label> labels) {
  double n_dep = 0, n_no = 0;
  for (Label l : labels) (l == Label::depression ? n_dep : n_no) += 1;
  if (n_dep == 0 || n_no == 0) throw DegenerateTaskError("class_weights: both classes must be present");
  const double n = n_dep + n_no;
  return {n / (2 * n_no), n / (2 * n_dep)};
}

}  // namespace moodscreen
