#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sann/field.hpp"
#include "sann/linalg.hpp"

namespace sann {

enum class Scheme { kEuler, kRk4 };

const char* scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

struct SannConfig {
  std::size_t steps = 10;
  double c_max = 10.0;
  Scheme scheme = Scheme::kEuler;
  double eps_sing = kDefaultSingularTol;
  bool record_trajectory = false;

  // Throws std::invalid_argument on N = 0, c_max < 0 or eps_sing <= 0.
  void validate() const;
};

struct TrajectoryState {
  double s = 0.0;
  Vector z;
  Vector zdot;
};

struct Trajectory {
  SannConfig config;
  double s0 = 0.0;
  double s_final = 1.0;
  Vector final_state;
  // N + 1 entries when recording; zdot of the last entry is the field's
  // velocity at the endpoint and is not used to advance the state.
  std::vector<TrajectoryState> states;
};

// NaN or Inf in M, b or the state. `step` is the index j of the state being
// advanced when the problem was detected.
class NonFiniteStateError : public std::runtime_error {
 public:
  NonFiniteStateError(std::size_t step, const std::string& what);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Componentwise min(max(v_i, lo), hi). Throws std::invalid_argument if lo > hi.
Vector clamp(std::span<const double> v, double lo, double hi);

// clamp(M^-1 b, -c_max, c_max), or 0 if M is flagged singular.
Vector clamp_sol(const Matrix& m, std::span<const double> b, double c_max,
                 double eps_sing = kDefaultSingularTol);

// One right-hand-side evaluation with the non-finite guard applied.
Vector field_velocity(const VectorFieldProgram& field, std::span<const double> x,
                      std::span<const double> z, double s, const SannConfig& config,
                      std::size_t step);

Trajectory ode_solve(const VectorFieldProgram& field, std::span<const double> x,
                     std::span<const double> z0, double s0, double s_final,
                     const SannConfig& config);

// Solves from z(0) = 0 over [0, 1] and returns the first n components.
Vector sann_eval(const VectorFieldProgram& field, std::span<const double> x,
                 const SannConfig& config);

// Header `step,s,z_0..,zdot_0..`; 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace sann
