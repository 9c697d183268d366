#include <gtest/gtest.h>

#include <cmath>

#include "sann/bench_linear.hpp"
#include "sann/glue_check.hpp"
#include "sann/homotopy_fields.hpp"
#include "sann/random.hpp"

namespace sann {
namespace {

using Span = std::span<const double>;

SannConfig euler(std::size_t steps, double c_max) {
  SannConfig c;
  c.steps = steps;
  c.c_max = c_max;
  return c;
}

// Constant velocity (vy, vt) on a state with n = 1, k = 1.
VectorFieldProgram drift(double vy, double vt, std::optional<TRange> hint = {}) {
  return VectorFieldProgram(
      {0, 1, 1}, [vy, vt](Span, Span, double) { return FieldOutput{Matrix::identity(2), {vy, vt}}; },
      hint);
}

// Plain Jacobi sweeps written as y += h * (r / (X_ii / N)), the update one
// Euler step of the Jacobi field performs, with the residual summed over j
// in ascending order.
std::vector<Vector> plain_jacobi(const Matrix& x, const Vector& g, std::size_t steps) {
  const std::size_t n = g.size();
  const double h = 1.0 / static_cast<double>(steps);
  std::vector<Vector> iterates{Vector(n, 0.0)};
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector& y = iterates.back();
    Vector next = y;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += x(i, j) * y[j];
      next[i] = y[i] + h * ((g[i] - acc) / (x(i, i) / static_cast<double>(steps)));
    }
    iterates.push_back(std::move(next));
  }
  return iterates;
}

TEST(JacobiField, DiagonalSystem) {
  const std::size_t steps = 100;
  const Vector x{2, 0, 0, 4, 2, 4};
  const Vector y = sann_eval(jacobi_field(2, steps), x, euler(steps, kJacobiCMax));
  EXPECT_NEAR(y[0], 1.0, 1e-12);
  EXPECT_NEAR(y[1], 1.0, 1e-12);
  const auto oracle = plain_jacobi(Matrix{{2, 0}, {0, 4}}, {2, 4}, steps);
  EXPECT_EQ(y, oracle.back());
}

TEST(JacobiField, MatchesPlainJacobiBitwise) {
  Rng rng(7);
  const std::size_t n = 50, steps = 100;
  SannConfig cfg = euler(steps, kJacobiCMax);
  cfg.record_trajectory = true;
  for (int sys = 0; sys < 3; ++sys) {
    const LinearSolveSample s = gen_dd_system(n, rng);
    const Sample smp = to_sample(s);
    const auto traj = ode_solve(jacobi_field(n, steps), smp.x, Vector(n + 1, 0.0), 0, 1, cfg);
    const auto oracle = plain_jacobi(s.x_mat, s.g, steps);
    for (std::size_t k = 0; k <= steps; ++k)
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(traj.states[k].z[i], oracle[k][i]) << k << "," << i;
    EXPECT_LE(linear_residual(smp, Span(traj.final_state).first(n)), 1e-10 * norm2(s.g));
  }
}

TEST(JacobiField, ZeroDiagonalStallsInsteadOfFailing) {
  const Vector x{0, 1, 1, 0, 1, 1};
  const Vector y = sann_eval(jacobi_field(2, 4), x, euler(4, kJacobiCMax));
  EXPECT_EQ(y, (Vector{0, 0}));
}

TEST(Heaviside, ExactValues) {
  const SannConfig cfg = euler(16, kHeavisideCMax);
  EXPECT_EQ(sann_eval(heaviside_field(), Vector{2}, cfg)[0], 1.0);
  EXPECT_EQ(sann_eval(heaviside_field(), Vector{-3}, cfg)[0], 0.0);
  EXPECT_EQ(sann_eval(heaviside_field(), Vector{0}, cfg)[0], 0.0);
  EXPECT_EQ(sann_eval(heaviside_field(), Vector{1e-8}, cfg)[0], 1.0);
}

double char_t(const VectorFieldProgram& f, double x, double c_max = 2.0) {
  return ode_solve(f, Vector{x}, Vector{0, 0}, 0, 1, euler(16, c_max)).final_state[1];
}

TEST(CharacteristicField, SignAnalysis) {
  const auto f = characteristic_field(1, [](Span x) { return std::pow(std::max(0.0, -x[0]), 2); });
  EXPECT_EQ(char_t(f, -1), 1.0);
  EXPECT_EQ(char_t(f, 0), 0.0);
  EXPECT_EQ(char_t(f, 2), 0.0);
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    const double x = rng.uniform(-5, 5);
    const double v = char_t(f, x);
    EXPECT_TRUE(v == 0.0 || v == 1.0) << x << " -> " << v;
    EXPECT_EQ(v, x < 0 ? 1.0 : 0.0);
  }
}

TEST(CharacteristicField, ConstantG) {
  const auto zero = characteristic_field(1, [](Span) { return 0.0; });
  const auto one = characteristic_field(1, [](Span) { return 1.0; });
  for (double x : {-2.0, 0.0, 3.0}) {
    EXPECT_EQ(char_t(zero, x), 0.0);
    EXPECT_EQ(char_t(one, x), 1.0);
  }
}

TEST(ScalarMultiply, IdentityZeroAndDoubling) {
  const auto f = characteristic_field(1, [](Span x) { return std::pow(std::max(0.0, -x[0]), 2); });
  for (double x : {-1.5, 0.5}) {
    EXPECT_EQ(char_t(scalar_multiply_field(f, 1.0), x), char_t(f, x));
    EXPECT_EQ(char_t(scalar_multiply_field(f, 0.0), x, 0.0), 0.0);
    const double v = char_t(scalar_multiply_field(f, 2.0), x, 4.0);
    EXPECT_EQ(v, x < 0 ? 2.0 : 0.0);
  }
}

TEST(ChangeOfVariables, HermiteConditions) {
  const double s0 = -1, s1 = 0.2, s2 = 0.7, sf = 3;
  EXPECT_NEAR(hermite_u(s1, s0, s1, s2, sf), s0, 1e-12);
  EXPECT_NEAR(hermite_u(s2, s0, s1, s2, sf), sf, 1e-12);
  EXPECT_NEAR(hermite_du(s1, s0, s1, s2, sf), 0.0, 1e-12);
  EXPECT_NEAR(hermite_du(s2, s0, s1, s2, sf), 0.0, 1e-12);
}

TEST(ChangeOfVariables, ZeroVelocityOutsideWindow) {
  const auto f = change_of_variables(drift(0.5, 1.0), 0.0, 0.3, 0.6, 1.0);
  for (double s : {0.0, 0.1, 0.29, 0.61, 0.9, 1.0}) {
    const auto out = f.eval({}, Vector{0.2, 0.4}, s);
    EXPECT_EQ(out.b, (Vector{0, 0})) << s;
  }
}

TEST(ChangeOfVariables, EndpointPreserved) {
  const std::size_t steps = 400;
  const auto f = change_of_variables(drift(0, 1), 0.0, 0.25, 0.75, 1.0);
  const Vector z = ode_solve(f, {}, Vector{0, 0}, 0, 1, euler(steps, 10)).final_state;
  EXPECT_NEAR(z[1], 1.0, 2.0 / steps);
  EXPECT_THROW(change_of_variables(drift(0, 1), 0.0, 0.7, 0.3, 1.0), std::invalid_argument);
}

TEST(SGlue, FirstFieldThenZero) {
  using L = AddInTLayout;
  const std::size_t steps = 400;
  const auto f1 = change_of_variables(drift(0, 1), 0.0, L::kFirstBegin, L::kFirstEnd, 1.0);
  const auto f2 = drift(0, 0);
  const Vector z = ode_solve(s_glue(f1, f2, L::kMid, L::kGlueEps), {}, Vector{0, 0}, 0, 1,
                             euler(steps, 10))
                       .final_state;
  EXPECT_NEAR(z[1], 1.0, 2.0 / steps);
  EXPECT_THROW(s_glue(f1, f2, 0.99, 0.05), std::invalid_argument);
}

TEST(SGlue, MatchesSequentialSolve) {
  // Oracle: solve the windowed f1 up to s_mid and feed its state into f2.
  using L = AddInTLayout;
  Rng rng(5);
  const std::size_t steps = 64;
  for (int t = 0; t < 20; ++t) {
    const auto f1 = change_of_variables(drift(rng.uniform(-1, 1), rng.uniform(-1, 1)), 0.0,
                                        L::kFirstBegin, L::kFirstEnd, 1.0);
    const auto f2 = change_of_variables(drift(rng.uniform(-1, 1), rng.uniform(-1, 1)), 0.0,
                                        L::kSecondBegin, L::kSecondEnd, 1.0);
    const Vector z0{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Vector got =
        ode_solve(s_glue(f1, f2, L::kMid, L::kGlueEps), {}, z0, 0, 1, euler(steps, 10)).final_state;
    const Vector mid = ode_solve(f1, {}, z0, 0, 0.5, euler(steps / 2, 10)).final_state;
    const Vector want = ode_solve(f2, {}, mid, 0.5, 1, euler(steps / 2, 10)).final_state;
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(TGlue, EachRangeReproducesItsField) {
  const auto lower = drift(0.3, 0.2, TRange{-1, -0.8});
  const auto upper = drift(-0.7, -0.1, TRange{0.9, 1});
  const auto glued = t_glue(lower, upper);
  const SannConfig cfg = euler(50, 10);
  EXPECT_EQ(ode_solve(glued, {}, Vector{0.1, -1}, 0, 1, cfg).final_state,
            ode_solve(lower, {}, Vector{0.1, -1}, 0, 1, cfg).final_state);
  EXPECT_EQ(ode_solve(glued, {}, Vector{0.1, 1}, 0, 1, cfg).final_state,
            ode_solve(upper, {}, Vector{0.1, 1}, 0, 1, cfg).final_state);
}

TEST(TGlue, OverlappingOrMissingHintsThrow) {
  EXPECT_THROW(t_glue(drift(0, 1, TRange{0, 1}), drift(0, 1, TRange{0.5, 2})), std::invalid_argument);
  EXPECT_THROW(t_glue(drift(0, 1), drift(0, 1, TRange{3, 4})), std::invalid_argument);
}

TEST(ChangeSBounds, IdentityAndScaling) {
  const auto f = drift(0.25, 1);
  const auto same = change_s_bounds(f, 0, 1, 0, 1);
  EXPECT_EQ(same.eval({}, Vector{0, 0}, 0.3).b, f.eval({}, Vector{0, 0}, 0.3).b);
  const auto half = change_s_bounds(f, 0, 1, 0, 0.5);
  EXPECT_EQ(half.eval({}, Vector{0, 0}, 0.3).b, (Vector{0.5, 2}));
  const Vector got = ode_solve(half, {}, Vector{0, 0}, 0, 0.5, euler(10, 10)).final_state;
  const Vector want = ode_solve(f, {}, Vector{0, 0}, 0, 1, euler(10, 10)).final_state;
  EXPECT_EQ(got, want);
  EXPECT_THROW(change_s_bounds(f, 0, 1, 1, 1), std::invalid_argument);
}

TEST(ShiftInitial, ZeroShiftAndTranslation) {
  const auto f = drift(0.5, -0.25);
  const auto same = shift_initial(f, Vector{0}, 0.0);
  EXPECT_EQ(same.eval({}, Vector{1, 2}, 0.1).b, f.eval({}, Vector{1, 2}, 0.1).b);
  const auto shifted = shift_initial(f, Vector{2}, -3);
  const Vector got = ode_solve(shifted, {}, Vector{2, -3}, 0, 1, euler(8, 10)).final_state;
  EXPECT_EQ(got, (Vector{2.5, -3.25}));
}

TEST(AddInT, ZeroSecondFieldKeepsFirstEndpoint) {
  const std::size_t steps = 800;
  const auto f1 = drift(0, 3);
  const auto f2 = drift(0, 0, TRange{0, 0});
  const Vector z = ode_solve(add_in_t(f1, f2, {0, 3}), {}, Vector{0, 0}, 0, 1, euler(steps, 20)).final_state;
  EXPECT_NEAR(z[1], 3.0, 3.0 * 2.0 / steps);
}

TEST(AddInT, SumsTOutputs) {
  const std::size_t steps = 800;
  const auto f2 = drift(0, 1, TRange{0, 1});
  for (double tau : {0.0, 3.0}) {
    const auto f1 = drift(0, tau);
    const Vector z =
        ode_solve(add_in_t(f1, f2, {0, 3}), {}, Vector{0, 0}, 0, 1, euler(steps, 20)).final_state;
    EXPECT_NEAR(z[1], tau + 1.0, 8.0 / steps);
  }
}

TEST(AddInT, GapHypothesisEnforced) {
  EXPECT_THROW(add_in_t(drift(0, 1), drift(0, 1, TRange{0, 1}), {0, 1.5}), std::invalid_argument);
  EXPECT_THROW(add_in_t(drift(0, 1), drift(0, 1), {0, 3}), std::invalid_argument);
}

TEST(GlueChecks, AllCombinatorsMatchOracles) {
  GlueCheckOptions opts;
  opts.trials = 10;
  for (const auto& e : run_glue_checks(opts)) {
    EXPECT_EQ(e.trials, 10u) << e.combinator;
    EXPECT_LE(e.max_abs_diff, 1e-12) << e.combinator;
  }
}

TEST(CurveTracer, LinearHomotopy) {
  const std::size_t steps = 1000;
  const Vector a{0.5, -1}, c{2, 3};
  const auto p = linear_homotopy(a, c);
  CurveTracerConfig cfg;
  cfg.beta = arc_length_to_t1(p);
  const auto traj = trace_homotopy(p, cfg, euler(steps, 2 * cfg.beta));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(traj.final_state[i], c[i], 2.0 / steps);
}

TEST(CurveTracer, SquareRoot) {
  const std::size_t steps = 1000;
  for (double x : {1.0, 2.0, 4.0, 9.0}) {
    const auto p = sqrt_homotopy(0.5, x);
    CurveTracerConfig cfg;
    cfg.beta = arc_length_to_t1(p);
    SannConfig sc = euler(steps, 2 * cfg.beta);
    sc.record_trajectory = true;
    const auto traj = trace_homotopy(p, cfg, sc);
    EXPECT_NEAR(traj.final_state[0], std::sqrt(x), 5.0 / steps) << x;
    // Speed stays at beta and the orientation never flips.
    const int sigma = start_orientation(p);
    for (const auto& st : traj.states) {
      EXPECT_NEAR(norm2(st.zdot), cfg.beta, 1e-9 * cfg.beta);
      const Matrix dh = p.jacobian(Span(st.z).first(1), st.z[1]);
      Matrix aug(2, 2);
      aug(0, 0) = dh(0, 0);
      aug(0, 1) = dh(0, 1);
      aug(1, 0) = st.zdot[0];
      aug(1, 1) = st.zdot[1];
      EXPECT_EQ(determinant(lu_factor(aug)) > 0 ? 1 : -1, sigma);
    }
  }
}

TEST(CurveTracer, OrientationAtMidpointMatchesStart) {
  const auto p = linear_homotopy(Vector{0}, Vector{1});
  CurveTracerConfig cfg;
  cfg.beta = arc_length_to_t1(p);
  SannConfig sc = euler(100, 2 * cfg.beta);
  sc.record_trajectory = true;
  const auto traj = trace_homotopy(p, cfg, sc);
  const auto& mid = traj.states[50];
  EXPECT_NEAR(mid.s, 0.5, 1e-15);
  const Matrix dh = p.jacobian(Span(mid.z).first(1), mid.z[1]);
  const Matrix aug{{dh(0, 0), dh(0, 1)}, {mid.zdot[0], mid.zdot[1]}};
  EXPECT_EQ(determinant(lu_factor(aug)) > 0 ? 1 : -1, start_orientation(p));
}

TEST(CurveTracer, JacobianMatchesFiniteDifferences) {
  Rng rng(9);
  const auto p = sqrt_homotopy(0.5, 3.0);
  for (int t = 0; t < 20; ++t) {
    const double y = rng.uniform(-2, 2), tt = rng.uniform(0, 1), h = 1e-6;
    const Matrix j = p.jacobian(Vector{y}, tt);
    const double dy = (p.h(Vector{y + h}, tt)[0] - p.h(Vector{y - h}, tt)[0]) / (2 * h);
    const double dt = (p.h(Vector{y}, tt + h)[0] - p.h(Vector{y}, tt - h)[0]) / (2 * h);
    EXPECT_NEAR(j(0, 0), dy, 1e-5 * std::max(1.0, std::abs(dy)));
    EXPECT_NEAR(j(0, 1), dt, 1e-5 * std::max(1.0, std::abs(dt)));
  }
}

TEST(CurveTracer, RankDeficientJacobianThrows) {
  HomotopyProblem p;
  p.n = 1;
  p.h = [](Span, double) { return Vector{0}; };
  p.jacobian = [](Span, double) { return Matrix(1, 2); };
  p.start = {0};
  EXPECT_THROW(curve_tracing_field(p, {}).eval({}, Vector{0, 0}, 0.0), RankDeficiencyError);
}

}  // namespace
}  // namespace sann
