#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sann/field.hpp"
#include "sann/random.hpp"

namespace sann {

// M = blockdiag(D, 1) with D constant and diagonally dominant;
// b_y = c0 + c1 s + c2 s^2 + c3 x + A y with small A, and b_t = t_speed.
// Trajectories from t = t0 stay in [t0, t0 + t_speed] (or the reverse).
struct PolyFieldParams {
  Matrix d;
  Vector c0, c1, c2, c3;
  Matrix a;
  double t_speed = 0.0;
};

PolyFieldParams random_poly_params(std::size_t n, double t_speed, Rng& rng);
VectorFieldProgram poly_field(const PolyFieldParams& p, std::optional<TRange> hint = {});

struct GlueCheckEntry {
  std::string combinator;
  double max_abs_diff = 0.0;  // combinator endpoint vs oracle, over all trials
  std::size_t trials = 0;
};

struct GlueCheckOptions {
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::size_t steps = 200;  // even, so the s-glue midpoint is a grid point
};

// Compares every combinator's endpoint with a directly computed Euler oracle
// on the same s-grid.
std::vector<GlueCheckEntry> run_glue_checks(const GlueCheckOptions& opts);

}  // namespace sann
