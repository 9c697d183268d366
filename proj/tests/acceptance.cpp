// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sann/bench_linear.hpp"
#include "sann/eit.hpp"
#include "sann/glue_check.hpp"
#include "sann/gradcheck.hpp"
#include "sann/homotopy_fields.hpp"
#include "sann/sa_transformer.hpp"
#include "sann/sann_core.hpp"

using namespace sann;
using Span = std::span<const double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SannConfig euler(std::size_t steps, double c_max) {
  SannConfig c;
  c.steps = steps;
  c.c_max = c_max;
  return c;
}

// 1. Jacobi vector field against plain Jacobi, bit for bit.
Outcome jacobi() {
  Stopwatch sw;
  const std::size_t n = 50, steps = 100, systems = 20;
  Rng rng(7);
  SannConfig cfg = euler(steps, kJacobiCMax);
  cfg.record_trajectory = true;
  const VectorFieldProgram field = jacobi_field(n, steps);
  bool bitwise = true;
  double worst = 0.0;
  const double h = 1.0 / static_cast<double>(steps);
  for (std::size_t k = 0; k < systems; ++k) {
    const LinearSolveSample sys = gen_dd_system(n, rng);
    const Sample s = to_sample(sys);
    const Trajectory traj = ode_solve(field, s.x, Vector(n + 1, 0.0), 0.0, 1.0, cfg);
    // Plain Jacobi: y += h * (r / (X_ii / N)), residual summed over j ascending.
    Vector y(n, 0.0), next(n);
    for (std::size_t it = 1; it <= steps; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += sys.x_mat(i, j) * y[j];
        next[i] = y[i] + h * ((sys.g[i] - acc) / (sys.x_mat(i, i) / static_cast<double>(steps)));
      }
      y = next;
      for (std::size_t i = 0; i < n; ++i) bitwise &= traj.states[it].z[i] == y[i];
    }
    worst = std::max(worst, linear_residual(s, y) / norm2(sys.g));
  }
  const double secs = sw.seconds();
  return {bitwise && worst <= 1e-10 && secs <= 5.0,
          std::string("bitwise ") + (bitwise ? "yes" : "no") + ", max ||Xy-g||/||g|| " + fmt(worst) +
              ", " + fmt(secs) + " s"};
}

// 2. Heaviside outputs with tolerance 0.
Outcome heaviside() {
  const double xs[] = {-10, -1, -1e-8, 0, 1e-8, 1, 10};
  const double want[] = {0, 0, 0, 0, 1, 1, 1};
  const SannConfig cfg = euler(16, kHeavisideCMax);
  std::string got;
  bool ok = true;
  for (int i = 0; i < 7; ++i) {
    const double v = sann_eval(heaviside_field(), Vector{xs[i]}, cfg)[0];
    ok &= v == want[i];
    got += (i ? "," : "") + fmt(v);
  }
  return {ok, "outputs {" + got + "}"};
}

// 3. Characteristic function of {x < 0} via g = max(0, -x)^2.
Outcome charfn() {
  const auto f = characteristic_field(1, [](Span x) { return std::pow(std::max(0.0, -x[0]), 2); });
  Rng rng(3);
  std::size_t bad = 0, ones = 0;
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform(-10, 10);
    const double t = ode_solve(f, Vector{x}, Vector{0, 0}, 0, 1, euler(16, 2.0)).final_state[1];
    if (!(t == 0.0 || t == 1.0) || t != (x < 0 ? 1.0 : 0.0)) ++bad;
    ones += t == 1.0;
  }
  return {bad == 0, std::to_string(bad) + " of 1000 outside {0,1} or wrong (" + std::to_string(ones) +
                        " ones)"};
}

// 4. Every combinator against its oracle.
Outcome glue() {
  GlueCheckOptions opts;
  opts.trials = 50;
  double worst = 0.0;
  std::string detail;
  bool ok = true;
  for (const auto& e : run_glue_checks(opts)) {
    worst = std::max(worst, e.max_abs_diff);
    ok &= e.trials == 50 && e.max_abs_diff <= 1e-12;
    detail += e.combinator + " " + fmt(e.max_abs_diff) + "; ";
  }
  return {ok, detail + "max " + fmt(worst)};
}

// 5. Arc-length tracer.
Outcome tracer() {
  const std::size_t steps = 1000;
  double worst_sqrt = 0.0, worst_lin = 0.0;
  for (double x : {1.0, 2.0, 4.0, 9.0}) {
    const auto p = sqrt_homotopy(0.5, x);
    CurveTracerConfig cfg;
    cfg.beta = arc_length_to_t1(p);
    const auto traj = trace_homotopy(p, cfg, euler(steps, 2 * cfg.beta));
    worst_sqrt = std::max(worst_sqrt, std::abs(traj.final_state[0] - std::sqrt(x)));
  }
  const Vector a{0.5, -1, 2}, c{2, 3, -1};
  const auto p = linear_homotopy(a, c);
  CurveTracerConfig cfg;
  cfg.beta = arc_length_to_t1(p);
  const auto traj = trace_homotopy(p, cfg, euler(steps, 2 * cfg.beta));
  for (std::size_t i = 0; i < a.size(); ++i)
    worst_lin = std::max(worst_lin, std::abs(traj.final_state[i] - c[i]));
  return {worst_sqrt <= 5.0 / steps && worst_lin <= 2.0 / steps,
          "sqrt max err " + fmt(worst_sqrt) + " (bound " + fmt(5.0 / steps) + "), linear max err " +
              fmt(worst_lin) + " (bound " + fmt(2.0 / steps) + ")"};
}

// 6. Finite-difference gradient check.
Outcome gradients() {
  Stopwatch sw;
  GradCheckOptions opts;
  double worst = 0.0;
  bool trials_ok = true;
  std::string worst_name;
  for (const auto& e : run_gradcheck(opts)) {
    if (e.max_rel_error >= worst) {
      worst = e.max_rel_error;
      worst_name = e.name;
    }
    trials_ok &= e.trials == opts.trials;
  }
  const double secs = sw.seconds();
  return {trials_ok && worst <= 1e-4 && secs <= 60.0,
          "max rel err " + fmt(worst) + " (" + worst_name + "), " + fmt(secs) + " s"};
}

void log_epoch(const std::string& model, const EpochLog& e) {
  std::cerr << "  [" << model << "] epoch " << e.epoch << " loss " << fmt(e.train_loss) << " val "
            << fmt(e.val_metric) << "\n";
}

// 7. Linear-solve training with the default configuration.
Outcome linear_training() {
  Stopwatch sw;
  const LinearReport r = train_linear(LinearConfig{}, log_epoch);
  const double secs = sw.seconds();
  const double s = r.sann.final_val_metric, b = r.baseline.final_val_metric;
  const double improvement = r.sann.initial_val_metric / s;
  return {s <= 0.3 && s <= 2.0 * b && improvement >= 5.0 && secs <= 900.0,
          "SANN residual " + fmt(s) + " (" + std::to_string(r.sann.parameter_count) +
              " params), baseline " + fmt(b) + " (" + std::to_string(r.baseline.parameter_count) +
              " params), improvement " + fmt(improvement) + "x, " + fmt(secs) + " s"};
}

// 8. Network EIT with the default configuration.
Outcome eit() {
  Stopwatch sw;
  const EitReport r = train_eit(EitConfig{}, log_epoch);
  const double secs = sw.seconds();
  const double clean = r.sann.final_val_metric, noisy = r.sann_noisy;
  return {r.oracle_success_rate >= 0.95 && clean <= 0.06 && noisy <= 0.07 && secs <= 1200.0,
          "Gauss-Newton success " + fmt(r.oracle_success_rate) + ", SANN " + fmt(clean) +
              " noiseless / " + fmt(noisy) + " noisy (" + std::to_string(r.sann.parameter_count) +
              " params), baseline " + fmt(r.baseline.final_val_metric) + " / " +
              fmt(r.baseline_noisy) + ", " + fmt(secs) + " s"};
}

// 9. Convergence order on zdot = z.
Outcome order() {
  const VectorFieldProgram f({0, 1, 1}, [](Span, Span z, double) {
    return FieldOutput{Matrix::identity(2), Vector(z.begin(), z.end())};
  });
  auto err = [&](Scheme s, std::size_t n) {
    SannConfig c = euler(n, 100.0);
    c.scheme = s;
    return std::abs(ode_solve(f, {}, Vector{1, 1}, 0, 1, c).final_state[0] - std::exp(1.0));
  };
  double e_lo = 1, e_hi = 0, r_lo = 1, r_hi = 0;
  for (std::size_t n = 10; n < 1280; n *= 2) {
    const double r = err(Scheme::kEuler, 2 * n) / err(Scheme::kEuler, n);
    e_lo = std::min(e_lo, r);
    e_hi = std::max(e_hi, r);
  }
  // Beyond N = 160 the rk4 error reaches rounding level.
  for (std::size_t n = 10; n < 160; n *= 2) {
    const double r = err(Scheme::kRk4, 2 * n) / err(Scheme::kRk4, n);
    r_lo = std::min(r_lo, r);
    r_hi = std::max(r_hi, r);
  }
  const bool ok = e_lo >= 0.4 && e_hi <= 0.6 && r_lo >= 0.5 / 16 && r_hi <= 1.5 / 16;
  return {ok, "euler ratios in [" + fmt(e_lo) + ", " + fmt(e_hi) + "], rk4 ratios in [" + fmt(r_lo) +
                  ", " + fmt(r_hi) + "] (1/16 = 0.0625)"};
}

// 10. Transformer properties.
Outcome transformer() {
  bool ok = saxp(0.0) == 1.0;
  double prev = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double v = saxp(-100.0 + i * 1e-3);
    ok &= v > 0.0 && (i == 0 || v > prev);
    prev = v;
  }
  const bool saxp_ok = ok;
  Rng rng(1);
  double worst_row = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + t % 10;
    Matrix x(n, n);
    for (double& v : x.data()) v = rng.uniform(-10, 10);
    const Matrix s = sargmax(x);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (double v : s.row(i)) {
        ok &= v > 0.0 && v <= 1.0;
        sum += v;
      }
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
  }
  ok &= worst_row <= 1e-12;
  std::size_t nonfinite = 0;
  const TransformerDims dims;
  for (int t = 0; t < 1000; ++t) {
    const auto p = random_block(dims, rng);
    Matrix x(dims.d_in, 1 + t % 16);
    for (double& v : x.data()) v = rng.uniform(-10, 10);
    for (double v : transformer_block(p, x).data())
      if (!std::isfinite(v)) {
        ++nonfinite;
        break;
      }
  }
  ok &= nonfinite == 0;
  return {ok, std::string("saxp ") + (saxp_ok ? "ok" : "bad") + ", max |row sum - 1| " +
                  fmt(worst_row) + ", non-finite blocks " + std::to_string(nonfinite) + "/1000"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: sann_acceptance [--only N]\n";
      return 2;
    }
  }
  const std::vector<Criterion> all = {
      {1, "jacobi exactness", jacobi},
      {2, "heaviside exactness", heaviside},
      {3, "characteristic function exactness", charfn},
      {4, "glueing oracle equivalence", glue},
      {5, "curve tracer", tracer},
      {6, "gradient correctness", gradients},
      {7, "linear-solve training", linear_training},
      {8, "network EIT", eit},
      {9, "ODE solver order", order},
      {10, "transformer properties", transformer},
  };
  if (only < 0 || only > static_cast<int>(all.size())) {
    std::cerr << "no criterion " << only << "\n";
    return 2;
  }
  int failures = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
