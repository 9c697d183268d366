#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sann {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t trials = 0;
  std::size_t redraws = 0;  // draws rejected for sitting within kink_margin of a kink
};

struct GradCheckOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  double kink_margin = 1e-3;
  double step = 1e-5;
};

// Central-difference checks of every tape primitive and of the end-to-end
// SANN loss (2-layer MRNN, linear-solve packing with n = 3, k = 1, N = 5, both
// loss terms). Each entry reports the worst relative error over its trials.
std::vector<GradCheckEntry> run_gradcheck(const GradCheckOptions& opts);

}  // namespace sann
