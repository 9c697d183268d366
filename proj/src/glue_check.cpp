#include "sann/glue_check.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "sann/homotopy_fields.hpp"
#include "sann/sann_core.hpp"

namespace sann {

namespace {

using Span = std::span<const double>;

constexpr double kCMax = 100.0;

SannConfig euler(std::size_t steps) {
  SannConfig c;
  c.steps = steps;
  c.c_max = kCMax;
  return c;
}

double max_abs_diff(Span a, Span b) {
  if (a.size() != b.size()) throw DimensionError("glue check: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

using Velocity = std::function<Vector(Span z, double s)>;

// Plain explicit Euler with the same grid and update as ode_solve.
Vector euler_loop(const Velocity& v, Vector z, double s0, double s_final, std::size_t steps) {
  const double h = (s_final - s0) / static_cast<double>(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    const double s = s0 + static_cast<double>(j) * h;
    const Vector zd = v(z, s);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += h * zd[i];
  }
  return z;
}

// Velocity of f run through the Hermite reparameterization of [0, 1] onto
// [s1, s2], written out from f's own (M, b).
Velocity reparameterized(const VectorFieldProgram& f, Span x, double s1, double s2) {
  return [&f, x, s1, s2](Span z, double s) {
    const double du = hermite_du(s, 0.0, s1, s2, 1.0);
    if (du == 0.0) return Vector(z.size(), 0.0);
    FieldOutput out = f.eval(x, z, hermite_u(s, 0.0, s1, s2, 1.0));
    for (double& v : out.b) v *= du;
    return clamp_sol(out.m, out.b, kCMax);
  };
}

Vector random_vec(std::size_t n, double lo, double hi, Rng& rng) {
  Vector v(n);
  for (double& e : v) e = rng.uniform(lo, hi);
  return v;
}

TRange t_span(double t0, double speed) {
  return {std::min(t0, t0 + speed), std::max(t0, t0 + speed)};
}

constexpr std::size_t kN = 2;

}  // namespace

PolyFieldParams random_poly_params(std::size_t n, double t_speed, Rng& rng) {
  PolyFieldParams p;
  p.d = Matrix(n, n);
  p.a = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) p.d(i, j) = rng.uniform(-0.5, 0.5);
      p.a(i, j) = rng.uniform(-0.2, 0.2);
    }
    p.d(i, i) = rng.uniform(1.0, 2.0) + 0.5 * static_cast<double>(n);
  }
  p.c0 = random_vec(n, -1.0, 1.0, rng);
  p.c1 = random_vec(n, -1.0, 1.0, rng);
  p.c2 = random_vec(n, -1.0, 1.0, rng);
  p.c3 = random_vec(n, -1.0, 1.0, rng);
  p.t_speed = t_speed;
  return p;
}

VectorFieldProgram poly_field(const PolyFieldParams& p, std::optional<TRange> hint) {
  const std::size_t n = p.d.rows();
  return VectorFieldProgram(
      FieldDims{1, n, 1},
      [p, n](Span x, Span z, double s) {
        FieldOutput out{Matrix(n + 1, n + 1), Vector(n + 1)};
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) out.m(i, j) = p.d(i, j);
          double b = p.c0[i] + p.c1[i] * s + p.c2[i] * s * s + p.c3[i] * x[0];
          for (std::size_t j = 0; j < n; ++j) b += p.a(i, j) * z[j];
          out.b[i] = b;
        }
        out.m(n, n) = 1.0;
        out.b[n] = p.t_speed;
        return out;
      },
      hint);
}

std::vector<GlueCheckEntry> run_glue_checks(const GlueCheckOptions& opts) {
  if (opts.steps < 2 || opts.steps % 2 != 0) throw std::invalid_argument("glue check: steps must be even");
  Rng rng(opts.seed);
  const std::size_t steps = opts.steps;
  const SannConfig cfg = euler(steps);
  using L = AddInTLayout;

  GlueCheckEntry smul{"scalar_multiply"}, cov{"change_of_variables"}, sglue{"s_glue"},
      tglue{"t_glue"}, bounds{"change_s_bounds"}, shift{"shift_initial"}, addt{"add_in_t"};

  for (std::size_t trial = 0; trial < opts.trials; ++trial) {
    const Vector x{rng.uniform(-1.0, 1.0)};
    const Vector z0 = random_vec(kN + 1, -0.5, 0.5, rng);
    const VectorFieldProgram f = poly_field(random_poly_params(kN, rng.uniform(-1.0, 1.0), rng));
    const Vector base = ode_solve(f, x, z0, 0.0, 1.0, cfg).final_state;

    {  // trajectories of alpha f are alpha times those of f
      double alpha = rng.uniform(0.5, 2.0);
      if (rng.uniform01() < 0.5) alpha = -alpha;
      Vector za = z0;
      for (double& v : za) v *= alpha;
      SannConfig c = cfg;
      c.c_max = kCMax * std::abs(alpha);
      const Vector got = ode_solve(scalar_multiply_field(f, alpha), x, za, 0.0, 1.0, c).final_state;
      Vector want = base;
      for (double& v : want) v *= alpha;
      smul.max_abs_diff = std::max(smul.max_abs_diff, max_abs_diff(got, want));
      ++smul.trials;
    }
    {  // same dynamics on a different s interval
      const double a = rng.uniform(-1.0, 1.0);
      const double b = a + rng.uniform(0.5, 3.0);
      const Vector got = ode_solve(change_s_bounds(f, 0.0, 1.0, a, b), x, z0, a, b, cfg).final_state;
      bounds.max_abs_diff = std::max(bounds.max_abs_diff, max_abs_diff(got, base));
      ++bounds.trials;
    }
    {  // shifted start gives the shifted solution
      const Vector dy = random_vec(kN, -1.0, 1.0, rng);
      const double dt = rng.uniform(-1.0, 1.0);
      Vector zs = z0;
      for (std::size_t i = 0; i < kN; ++i) zs[i] += dy[i];
      zs[kN] += dt;
      const Vector got = ode_solve(shift_initial(f, dy, dt), x, zs, 0.0, 1.0, cfg).final_state;
      Vector want = base;
      for (std::size_t i = 0; i < kN; ++i) want[i] += dy[i];
      want[kN] += dt;
      shift.max_abs_diff = std::max(shift.max_abs_diff, max_abs_diff(got, want));
      ++shift.trials;
    }
    {
      const double s1 = rng.uniform(0.05, 0.4);
      const double s2 = rng.uniform(0.6, 0.95);
      const Vector got =
          ode_solve(change_of_variables(f, 0.0, s1, s2, 1.0), x, z0, 0.0, 1.0, cfg).final_state;
      const Vector want = euler_loop(reparameterized(f, x, s1, s2), z0, 0.0, 1.0, steps);
      cov.max_abs_diff = std::max(cov.max_abs_diff, max_abs_diff(got, want));
      ++cov.trials;
    }
    const VectorFieldProgram g = poly_field(random_poly_params(kN, rng.uniform(-1.0, 1.0), rng));
    {  // run f's window, then g's
      const VectorFieldProgram f1 = change_of_variables(f, 0.0, L::kFirstBegin, L::kFirstEnd, 1.0);
      const VectorFieldProgram f2 = change_of_variables(g, 0.0, L::kSecondBegin, L::kSecondEnd, 1.0);
      const Vector got = ode_solve(s_glue(f1, f2, L::kMid, L::kGlueEps), x, z0, 0.0, 1.0, cfg).final_state;
      const Vector mid = euler_loop(reparameterized(f, x, L::kFirstBegin, L::kFirstEnd), z0, 0.0,
                                    L::kMid, steps / 2);
      const Vector want = euler_loop(reparameterized(g, x, L::kSecondBegin, L::kSecondEnd), mid,
                                     L::kMid, 1.0, steps / 2);
      sglue.max_abs_diff = std::max(sglue.max_abs_diff, max_abs_diff(got, want));
      ++sglue.trials;
    }
    {  // starting inside either t-range reproduces that field exactly
      const PolyFieldParams lp = random_poly_params(kN, -rng.uniform(0.0, 0.5), rng);
      const PolyFieldParams up = random_poly_params(kN, rng.uniform(0.0, 0.5), rng);
      const VectorFieldProgram lower = poly_field(lp, t_span(-1.0, lp.t_speed));
      const VectorFieldProgram upper = poly_field(up, t_span(1.0, up.t_speed));
      const VectorFieldProgram glued = rng.uniform01() < 0.5 ? t_glue(lower, upper) : t_glue(upper, lower);
      Vector zl = z0, zu = z0;
      zl[kN] = -1.0;
      zu[kN] = 1.0;
      const double dl = max_abs_diff(ode_solve(glued, x, zl, 0.0, 1.0, cfg).final_state,
                                     ode_solve(lower, x, zl, 0.0, 1.0, cfg).final_state);
      const double du = max_abs_diff(ode_solve(glued, x, zu, 0.0, 1.0, cfg).final_state,
                                     ode_solve(upper, x, zu, 0.0, 1.0, cfg).final_state);
      tglue.max_abs_diff = std::max({tglue.max_abs_diff, dl, du});
      ++tglue.trials;
    }
    {  // f1 moves t from 0 to one of t_outs, then f2 continues with t shifted by it
      const Vector t_outs{-2.0, 0.0, 2.0, 4.0};
      const double tau = t_outs[rng.next() % t_outs.size()];
      const PolyFieldParams p1 = random_poly_params(kN, tau, rng);
      const PolyFieldParams p2 = random_poly_params(kN, rng.uniform(-0.5, 0.5), rng);
      const VectorFieldProgram f1 = poly_field(p1);
      const VectorFieldProgram f2 = poly_field(p2, t_span(0.0, p2.t_speed));
      Vector start(kN + 1, 0.0);
      for (std::size_t i = 0; i < kN; ++i) start[i] = z0[i];
      const Vector got = ode_solve(add_in_t(f1, f2, t_outs), x, start, 0.0, 1.0, cfg).final_state;

      const Vector mid = euler_loop(reparameterized(f1, x, L::kFirstBegin, L::kFirstEnd), start,
                                    0.0, L::kMid, steps / 2);
      const Velocity second = [&](Span z, double s) {
        Vector zs(z.begin(), z.end());
        zs[kN] -= tau;
        return reparameterized(f2, x, L::kSecondBegin, L::kSecondEnd)(zs, s);
      };
      const Vector want = euler_loop(second, mid, L::kMid, 1.0, steps / 2);
      addt.max_abs_diff = std::max(addt.max_abs_diff, max_abs_diff(got, want));
      ++addt.trials;
    }
  }
  return {smul, cov, sglue, tglue, bounds, shift, addt};
}

}  // namespace sann
