#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sann/field.hpp"
#include "sann/linalg.hpp"
#include "sann/sann_core.hpp"

namespace sann {

// Bound used with jacobi_field: large enough never to bind on diagonally
// dominant inputs, while keeping clamp_sol's contract finite.
inline constexpr double kJacobiCMax = 1e6;
inline constexpr double kHeavisideCMax = 2.0;

// Input x = vec(X) ++ g (row-major X, n x n). M = diag(X_11, ..., X_nn, 1) / N
// and b = (g - X y, 0), so one Euler step of width 1/N is one Jacobi sweep.
VectorFieldProgram jacobi_field(std::size_t n, std::size_t steps);

// M = g(x) I and b = g(x) e_t: the t output is 1 where g(x) > 0 and 0 where g
// vanishes (M is then singular). Integrate with a power-of-two step count to
// land exactly on 1.
VectorFieldProgram characteristic_field(std::size_t m, std::function<double(std::span<const double>)> g,
                                        std::size_t n = 1);

// Scalar x: M = |x| I, b = (max(x, 0), 0). Output is the Heaviside step with
// H(0) = 0. Use c_max = kHeavisideCMax.
VectorFieldProgram heaviside_field();

// Scalar x: M = |x| I, b = (x, 0). y runs at speed sgn(x).
VectorFieldProgram sign_field();

// Field whose trajectories are alpha times those of f. The caller must scale
// c_max by |alpha|.
VectorFieldProgram scalar_multiply_field(const VectorFieldProgram& f, double alpha);

// Reparameterizes f's dynamics on [s0, s_final] into the window [s1, s2]
// through the cubic Hermite map u with u(s1) = s0, u(s2) = s_final and zero
// end slopes; b is exactly 0 outside the window. Needs c_max scaled by up to
// 1.5 (s_final - s0) / (s2 - s1).
VectorFieldProgram change_of_variables(const VectorFieldProgram& f, double s0, double s1,
                                       double s2, double s_final);

// The Hermite map used by change_of_variables and its derivative.
double hermite_u(double s, double s0, double s1, double s2, double s_final);
double hermite_du(double s, double s0, double s1, double s2, double s_final);

// f1's b for s <= s_mid, f2's for s > s_mid; M blends linearly on
// (s_mid - eps, s_mid + eps). Both b's must vanish on that window
// (e.g. via change_of_variables), which cannot be checked here.
VectorFieldProgram s_glue(const VectorFieldProgram& f1, const VectorFieldProgram& f2,
                          double s_mid, double eps);

// Selects f1 or f2 by the t coordinate (z[n]) using their t-range hints, which
// must be present and disjoint; blends linearly in the middle half of the gap.
VectorFieldProgram t_glue(const VectorFieldProgram& f1, const VectorFieldProgram& f2);

// Runs f's [s0, s_final] dynamics on [s0p, s_finalp]. b is scaled by
// alpha = (s_final - s0) / (s_finalp - s0p); c_max must be scaled likewise.
VectorFieldProgram change_s_bounds(const VectorFieldProgram& f, double s0, double s_final,
                                   double s0p, double s_finalp);

// Solving from z0 + (dy, dt) gives the f-solution from z0 shifted by (dy, dt).
// dt moves the t coordinate z[n] only.
VectorFieldProgram shift_initial(const VectorFieldProgram& f, std::span<const double> dy,
                                 double dt);

// Composite on [0, 1] whose t output is t_out(f1) + t_out(f2). f1 runs on
// [0.05, 0.45]; on [0.55, 0.95] a t-glued bank of copies of f2, each shifted
// in t by one of t_outs, continues from f1's endpoint. f1's t output must lie
// in t_outs and f2 needs a t-range hint whose diameter is below half the
// smallest gap of t_outs. Only t is shifted: the y part of f2 starts from
// f1's y output. c_max must cover 3.75x both fields' speeds.
VectorFieldProgram add_in_t(const VectorFieldProgram& f1, const VectorFieldProgram& f2,
                            std::vector<double> t_outs);

struct AddInTLayout {
  static constexpr double kFirstBegin = 0.05;
  static constexpr double kFirstEnd = 0.45;
  static constexpr double kMid = 0.5;
  static constexpr double kSecondBegin = 0.55;
  static constexpr double kSecondEnd = 0.95;
  static constexpr double kGlueEps = 0.025;
};

// H(y, t) = 0 with H: R^n x R -> R^n, traced from (start, 0).
struct HomotopyProblem {
  std::size_t n = 1;
  std::function<Vector(std::span<const double> y, double t)> h;
  std::function<Matrix(std::span<const double> y, double t)> jacobian;  // n x (n+1), t last
  Vector start;

  void validate() const;
};

// (1 - t)(y - a) + t (y - c).
HomotopyProblem linear_homotopy(std::span<const double> a, std::span<const double> c);
// (1 - t)(y - a) + t (y^2 - x), scalar.
HomotopyProblem sqrt_homotopy(double a, double x);

struct CurveTracerConfig {
  double beta = 1.0;
  bool pivot_retry = true;
  bool reorient_each_step = true;

  void validate() const;
};

class RankDeficiencyError : public std::runtime_error {
 public:
  RankDeficiencyError(Vector state, const std::string& what);
  const Vector& state() const { return state_; }

 private:
  Vector state_;
};

// Orientation sign of det [DH; zdot] for the start tangent pointing to
// increasing t.
int start_orientation(const HomotopyProblem& p);

// Arc-length field: at z = (y, t) it returns an (n+1) x (n+1) system whose
// solution zdot satisfies DH zdot = 0, |zdot| = beta and
// sgn det [DH; zdot] = start_orientation(p). Integrate from (start, 0) with
// c_max > beta. x is unused (m = 0).
VectorFieldProgram curve_tracing_field(const HomotopyProblem& p, const CurveTracerConfig& cfg);

// Arc length from (start, 0) to the first crossing of t = 1, from a unit-speed
// RK4 pilot trace with step ds; this is the beta that puts t(1) at 1.
double arc_length_to_t1(const HomotopyProblem& p, double ds = 1e-4, double max_length = 1e4);

// ode_solve of the tracer from (start, 0) over s in [0, 1].
Trajectory trace_homotopy(const HomotopyProblem& p, const CurveTracerConfig& cfg,
                          const SannConfig& config);

}  // namespace sann
