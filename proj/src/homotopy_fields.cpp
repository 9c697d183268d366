#include "sann/homotopy_fields.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace sann {

namespace {

using Span = std::span<const double>;

void require_same_dims(const VectorFieldProgram& a, const VectorFieldProgram& b, const char* who) {
  if (!(a.dims() == b.dims())) throw DimensionError(std::string(who) + ": field dimensions differ");
}

std::optional<TRange> hull(const std::optional<TRange>& a, const std::optional<TRange>& b) {
  if (!a || !b) return std::nullopt;
  return TRange{std::min(a->lo, b->lo), std::max(a->hi, b->hi)};
}

// (1 - lambda) a + lambda b for both M and b.
FieldOutput blend(const FieldOutput& a, const FieldOutput& b, double lambda) {
  FieldOutput out = a;
  auto md = out.m.data();
  const auto bd = b.m.data();
  for (std::size_t i = 0; i < md.size(); ++i) md[i] = (1.0 - lambda) * md[i] + lambda * bd[i];
  for (std::size_t i = 0; i < out.b.size(); ++i) {
    out.b[i] = (1.0 - lambda) * out.b[i] + lambda * b.b[i];
  }
  return out;
}

Matrix drop_column(const Matrix& dh, std::size_t c) {
  const std::size_t n = dh.rows();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t jj = 0;
    for (std::size_t j = 0; j <= n; ++j) {
      if (j != c) m(i, jj++) = dh(i, j);
    }
  }
  return m;
}

struct Pivot {
  std::size_t column = 0;
  LuFactorization lu;
};

std::optional<Pivot> pivot_for(const Matrix& dh, std::size_t c) {
  LuFactorization f = lu_factor(drop_column(dh, c));
  if (f.singular) return std::nullopt;
  return Pivot{c, std::move(f)};
}

Pivot best_pivot(const Matrix& dh, Span z) {
  std::optional<Pivot> best;
  double best_det = -1.0;
  for (std::size_t c = 0; c < dh.cols(); ++c) {
    auto p = pivot_for(dh, c);
    if (!p) continue;
    const double d = std::abs(determinant(p->lu));
    if (d > best_det) {
      best_det = d;
      best = std::move(p);
    }
  }
  if (!best) {
    throw RankDeficiencyError(Vector(z.begin(), z.end()),
                              "curve tracer: every n x n submatrix of DH is singular");
  }
  return std::move(*best);
}

// Kernel direction of DH with unit component at the pivot column.
Vector kernel_direction(const Matrix& dh, const Pivot& p) {
  const std::size_t n = dh.rows();
  Vector col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = dh(i, p.column);
  const Vector w = lu_solve(p.lu, col);
  Vector v(n + 1);
  std::size_t jj = 0;
  for (std::size_t j = 0; j <= n; ++j) v[j] = j == p.column ? 1.0 : -w[jj++];
  return v;
}

double orientation_det(const Matrix& dh, Span v) {
  const std::size_t n = dh.rows();
  Matrix a(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= n; ++j) a(i, j) = dh(i, j);
  for (std::size_t j = 0; j <= n; ++j) a(n, j) = v[j];
  return determinant(lu_factor(a));
}

Matrix checked_jacobian(const HomotopyProblem& p, Span y, double t) {
  Matrix dh = p.jacobian(y, t);
  if (dh.rows() != p.n || dh.cols() != p.n + 1) {
    throw DimensionError("HomotopyProblem: jacobian must be n x (n+1)");
  }
  return dh;
}

}  // namespace

VectorFieldProgram jacobi_field(std::size_t n, std::size_t steps) {
  if (n < 1 || steps < 1) throw std::invalid_argument("jacobi_field: need n >= 1 and steps >= 1");
  const double inv = static_cast<double>(steps);
  return VectorFieldProgram(FieldDims{n * n + n, n, 1}, [n, inv](Span x, Span z, double) {
    FieldOutput out{Matrix(n + 1, n + 1), Vector(n + 1, 0.0)};
    const double* g = x.data() + n * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = x.data() + i * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * z[j];
      out.b[i] = g[i] - acc;
      out.m(i, i) = row[i] / inv;
    }
    out.m(n, n) = 1.0 / inv;
    return out;
  });
}

VectorFieldProgram characteristic_field(std::size_t m, std::function<double(Span)> g,
                                        std::size_t n) {
  if (!g) throw std::invalid_argument("characteristic_field: empty g");
  return VectorFieldProgram(FieldDims{m, n, 1}, [g = std::move(g), n](Span x, Span, double) {
    const double v = g(x);
    FieldOutput out{Matrix(n + 1, n + 1), Vector(n + 1, 0.0)};
    for (std::size_t i = 0; i <= n; ++i) out.m(i, i) = v;
    out.b[n] = v;
    return out;
  });
}

VectorFieldProgram heaviside_field() {
  return VectorFieldProgram(FieldDims{1, 1, 1}, [](Span x, Span, double) {
    const double a = std::abs(x[0]);
    return FieldOutput{Matrix{{a, 0.0}, {0.0, a}}, Vector{std::max(x[0], 0.0), 0.0}};
  });
}

VectorFieldProgram sign_field() {
  return VectorFieldProgram(FieldDims{1, 1, 1}, [](Span x, Span, double) {
    const double a = std::abs(x[0]);
    return FieldOutput{Matrix{{a, 0.0}, {0.0, a}}, Vector{x[0], 0.0}};
  });
}

VectorFieldProgram scalar_multiply_field(const VectorFieldProgram& f, double alpha) {
  std::optional<TRange> hint;
  if (f.t_range_hint()) {
    const double a = alpha * f.t_range_hint()->lo;
    const double b = alpha * f.t_range_hint()->hi;
    hint = TRange{std::min(a, b), std::max(a, b)};
  }
  const std::size_t d = f.dims().state_dim();
  return VectorFieldProgram(
      f.dims(),
      [f, alpha, d](Span x, Span z, double s) {
        if (alpha == 0.0) return FieldOutput{Matrix::identity(d), Vector(d, 0.0)};
        Vector zs(z.begin(), z.end());
        for (double& v : zs) v /= alpha;
        FieldOutput out = f.eval(x, zs, s);
        for (double& v : out.b) v *= alpha;
        return out;
      },
      hint);
}

double hermite_u(double s, double s0, double s1, double s2, double s_final) {
  if (s <= s1) return s0;
  if (s >= s2) return s_final;
  const double tau = (s - s1) / (s2 - s1);
  return s0 + (s_final - s0) * (tau * tau * (3.0 - 2.0 * tau));
}

double hermite_du(double s, double s0, double s1, double s2, double s_final) {
  if (s <= s1 || s >= s2) return 0.0;
  const double tau = (s - s1) / (s2 - s1);
  return (s_final - s0) * 6.0 * tau * (1.0 - tau) / (s2 - s1);
}

VectorFieldProgram change_of_variables(const VectorFieldProgram& f, double s0, double s1,
                                       double s2, double s_final) {
  if (!(s0 < s1 && s1 < s2 && s2 < s_final)) {
    throw std::invalid_argument("change_of_variables: need s0 < s1 < s2 < s_final");
  }
  return VectorFieldProgram(
      f.dims(),
      [f, s0, s1, s2, s_final](Span x, Span z, double s) {
        FieldOutput out = f.eval(x, z, hermite_u(s, s0, s1, s2, s_final));
        const double du = hermite_du(s, s0, s1, s2, s_final);
        if (du == 0.0) {
          std::fill(out.b.begin(), out.b.end(), 0.0);
        } else {
          for (double& v : out.b) v *= du;
        }
        return out;
      },
      f.t_range_hint());
}

VectorFieldProgram s_glue(const VectorFieldProgram& f1, const VectorFieldProgram& f2,
                          double s_mid, double eps) {
  require_same_dims(f1, f2, "s_glue");
  if (!(eps > 0.0) || !(s_mid - eps > 0.0) || !(s_mid + eps < 1.0)) {
    throw std::invalid_argument("s_glue: window (s_mid - eps, s_mid + eps) must lie inside (0, 1)");
  }
  const double lo = s_mid - eps;
  const double hi = s_mid + eps;
  return VectorFieldProgram(
      f1.dims(),
      [f1, f2, s_mid, eps, lo, hi](Span x, Span z, double s) {
        if (s <= lo) return f1.eval(x, z, s);
        if (s >= hi) return f2.eval(x, z, s);
        const FieldOutput a = f1.eval(x, z, s);
        const FieldOutput b = f2.eval(x, z, s);
        FieldOutput out = blend(a, b, (s - lo) / (2.0 * eps));
        out.b = s <= s_mid ? a.b : b.b;
        return out;
      },
      hull(f1.t_range_hint(), f2.t_range_hint()));
}

VectorFieldProgram t_glue(const VectorFieldProgram& f1, const VectorFieldProgram& f2) {
  require_same_dims(f1, f2, "t_glue");
  if (!f1.t_range_hint() || !f2.t_range_hint()) {
    throw std::invalid_argument("t_glue: both fields need a t-range hint");
  }
  const bool ordered = f1.t_range_hint()->lo <= f2.t_range_hint()->lo;
  const VectorFieldProgram& lower = ordered ? f1 : f2;
  const VectorFieldProgram& upper = ordered ? f2 : f1;
  const TRange a = *lower.t_range_hint();
  const TRange b = *upper.t_range_hint();
  if (!(a.hi < b.lo)) {
    throw std::invalid_argument("t_glue: t-range hints overlap");
  }
  const double gap = b.lo - a.hi;
  const double lo = a.hi + 0.25 * gap;
  const double hi = b.lo - 0.25 * gap;
  const std::size_t tc = f1.dims().n;
  return VectorFieldProgram(
      f1.dims(),
      [lower, upper, lo, hi, tc](Span x, Span z, double s) {
        const double t = z[tc];
        if (t <= lo) return lower.eval(x, z, s);
        if (t >= hi) return upper.eval(x, z, s);
        return blend(lower.eval(x, z, s), upper.eval(x, z, s), (t - lo) / (hi - lo));
      },
      TRange{a.lo, b.hi});
}

VectorFieldProgram change_s_bounds(const VectorFieldProgram& f, double s0, double s_final,
                                   double s0p, double s_finalp) {
  if (!(s0 < s_final) || !(s0p < s_finalp)) {
    throw std::invalid_argument("change_s_bounds: degenerate interval");
  }
  const double alpha = (s_final - s0) / (s_finalp - s0p);
  return VectorFieldProgram(
      f.dims(),
      [f, s0, s0p, alpha](Span x, Span z, double s) {
        FieldOutput out = f.eval(x, z, s0 + (s - s0p) * alpha);
        for (double& v : out.b) v *= alpha;
        return out;
      },
      f.t_range_hint());
}

VectorFieldProgram shift_initial(const VectorFieldProgram& f, Span dy, double dt) {
  const std::size_t n = f.dims().n;
  if (dy.size() != n) throw DimensionError("shift_initial: dy must have n entries");
  Vector delta(f.dims().state_dim(), 0.0);
  std::copy(dy.begin(), dy.end(), delta.begin());
  delta[n] = dt;
  std::optional<TRange> hint;
  if (f.t_range_hint()) hint = TRange{f.t_range_hint()->lo + dt, f.t_range_hint()->hi + dt};
  return VectorFieldProgram(
      f.dims(),
      [f, delta](Span x, Span z, double s) {
        Vector zs(z.begin(), z.end());
        for (std::size_t i = 0; i < zs.size(); ++i) zs[i] -= delta[i];
        return f.eval(x, zs, s);
      },
      hint);
}

VectorFieldProgram add_in_t(const VectorFieldProgram& f1, const VectorFieldProgram& f2,
                            std::vector<double> t_outs) {
  require_same_dims(f1, f2, "add_in_t");
  if (t_outs.empty()) throw std::invalid_argument("add_in_t: t_outs is empty");
  if (!f2.t_range_hint()) throw std::invalid_argument("add_in_t: f2 needs a t-range hint");
  std::sort(t_outs.begin(), t_outs.end());
  t_outs.erase(std::unique(t_outs.begin(), t_outs.end()), t_outs.end());
  const TRange r2 = *f2.t_range_hint();
  if (t_outs.size() > 1) {
    double gap = t_outs[1] - t_outs[0];
    for (std::size_t i = 2; i < t_outs.size(); ++i) gap = std::min(gap, t_outs[i] - t_outs[i - 1]);
    if (!(r2.hi - r2.lo < 0.5 * gap)) {
      throw std::invalid_argument(
          "add_in_t: f2's t diameter must be below half the smallest gap between t_outs");
    }
  }
  using L = AddInTLayout;
  const VectorFieldProgram first = change_of_variables(f1, 0.0, L::kFirstBegin, L::kFirstEnd, 1.0);
  const Vector no_shift(f2.dims().n, 0.0);
  std::optional<VectorFieldProgram> bank;
  for (double t : t_outs) {
    VectorFieldProgram copy = change_of_variables(shift_initial(f2, no_shift, t), 0.0,
                                                  L::kSecondBegin, L::kSecondEnd, 1.0);
    bank = bank ? t_glue(*bank, copy) : copy;
  }
  VectorFieldProgram glued = s_glue(first, *bank, L::kMid, L::kGlueEps);
  if (f1.t_range_hint()) {
    return glued.with_t_range(TRange{std::min(f1.t_range_hint()->lo, t_outs.front() + r2.lo),
                                     std::max(f1.t_range_hint()->hi, t_outs.back() + r2.hi)});
  }
  return glued;
}

void HomotopyProblem::validate() const {
  if (n < 1) throw DimensionError("HomotopyProblem: n must be >= 1");
  if (!h || !jacobian) throw std::invalid_argument("HomotopyProblem: missing h or jacobian");
  if (start.size() != n) throw DimensionError("HomotopyProblem: start must have n entries");
}

HomotopyProblem linear_homotopy(Span a, Span c) {
  if (a.size() != c.size() || a.empty()) throw DimensionError("linear_homotopy: length mismatch");
  const std::size_t n = a.size();
  Vector av(a.begin(), a.end());
  Vector cv(c.begin(), c.end());
  HomotopyProblem p;
  p.n = n;
  p.start = av;
  p.h = [av, cv](Span y, double t) {
    Vector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = (1.0 - t) * (y[i] - av[i]) + t * (y[i] - cv[i]);
    return out;
  };
  p.jacobian = [av, cv, n](Span, double) {
    Matrix j(n, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      j(i, i) = 1.0;
      j(i, n) = av[i] - cv[i];
    }
    return j;
  };
  return p;
}

HomotopyProblem sqrt_homotopy(double a, double x) {
  HomotopyProblem p;
  p.n = 1;
  p.start = {a};
  p.h = [a, x](Span y, double t) {
    return Vector{(1.0 - t) * (y[0] - a) + t * (y[0] * y[0] - x)};
  };
  p.jacobian = [a, x](Span y, double t) {
    return Matrix{{(1.0 - t) + 2.0 * t * y[0], (y[0] * y[0] - x) - (y[0] - a)}};
  };
  return p;
}

void CurveTracerConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("CurveTracerConfig: beta must be positive");
  }
}

RankDeficiencyError::RankDeficiencyError(Vector state, const std::string& what)
    : std::runtime_error(what), state_(std::move(state)) {}

int start_orientation(const HomotopyProblem& p) {
  p.validate();
  Vector z(p.start);
  z.push_back(0.0);
  const Matrix dh = checked_jacobian(p, p.start, 0.0);
  const Pivot piv = best_pivot(dh, z);
  Vector v = kernel_direction(dh, piv);
  if (v[p.n] == 0.0) {
    throw RankDeficiencyError(z, "curve tracer: start tangent has no t component");
  }
  if (v[p.n] < 0.0) {
    for (double& e : v) e = -e;
  }
  const double d = orientation_det(dh, v);
  if (d == 0.0) throw RankDeficiencyError(z, "curve tracer: degenerate start orientation");
  return d > 0.0 ? 1 : -1;
}

VectorFieldProgram curve_tracing_field(const HomotopyProblem& p, const CurveTracerConfig& cfg) {
  p.validate();
  cfg.validate();
  const int sigma0 = start_orientation(p);
  Vector z0(p.start);
  z0.push_back(0.0);
  const std::size_t start_column = best_pivot(checked_jacobian(p, p.start, 0.0), z0).column;
  const std::size_t n = p.n;

  return VectorFieldProgram(FieldDims{0, n, 1}, [p, cfg, sigma0, start_column, n](
                                                    Span, Span z, double) {
    const Span y = z.first(n);
    const double t = z[n];
    const Matrix dh = checked_jacobian(p, y, t);
    std::optional<Pivot> piv;
    if (cfg.reorient_each_step) {
      piv = best_pivot(dh, z);
    } else {
      piv = pivot_for(dh, start_column);
      if (!piv) {
        if (!cfg.pivot_retry) {
          throw RankDeficiencyError(Vector(z.begin(), z.end()),
                                    "curve tracer: fixed pivot column became singular");
        }
        piv = best_pivot(dh, z);
      }
    }
    const Vector v = kernel_direction(dh, *piv);
    const double d = orientation_det(dh, v);
    if (d == 0.0) {
      throw RankDeficiencyError(Vector(z.begin(), z.end()), "curve tracer: [DH; v] is singular");
    }
    const double sign = (d > 0.0 ? 1.0 : -1.0) * sigma0;
    const double kappa = sign * cfg.beta / norm2(v);
    const std::size_t c = piv->column;

    FieldOutput out{Matrix(n + 1, n + 1), Vector(n + 1, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= n; ++j) {
        if (j != c) out.m(i, j) = dh(i, j);
      }
      out.b[i] = -kappa * dh(i, c);
    }
    out.m(n, c) = 1.0 / kappa;
    out.b[n] = 1.0;
    return out;
  });
}

double arc_length_to_t1(const HomotopyProblem& p, double ds, double max_length) {
  if (!(ds > 0.0)) throw std::invalid_argument("arc_length_to_t1: ds must be positive");
  const VectorFieldProgram f = curve_tracing_field(p, CurveTracerConfig{});
  SannConfig cfg;
  cfg.c_max = 2.0;
  const std::size_t d = p.n + 1;
  Vector z(p.start);
  z.push_back(0.0);
  Vector stage(d);
  const Vector none;
  std::size_t step = 0;
  for (double s = 0.0; s < max_length; s += ds, ++step) {
    const Vector k1 = field_velocity(f, none, z, s, cfg, step);
    for (std::size_t i = 0; i < d; ++i) stage[i] = z[i] + 0.5 * ds * k1[i];
    const Vector k2 = field_velocity(f, none, stage, s, cfg, step);
    for (std::size_t i = 0; i < d; ++i) stage[i] = z[i] + 0.5 * ds * k2[i];
    const Vector k3 = field_velocity(f, none, stage, s, cfg, step);
    for (std::size_t i = 0; i < d; ++i) stage[i] = z[i] + ds * k3[i];
    const Vector k4 = field_velocity(f, none, stage, s, cfg, step);
    const double t_prev = z[p.n];
    for (std::size_t i = 0; i < d; ++i) {
      z[i] += (ds / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (z[p.n] >= 1.0) return s + ds * (1.0 - t_prev) / (z[p.n] - t_prev);
  }
  throw std::runtime_error("arc_length_to_t1: t = 1 not reached within the length budget");
}

Trajectory trace_homotopy(const HomotopyProblem& p, const CurveTracerConfig& cfg,
                          const SannConfig& config) {
  const VectorFieldProgram f = curve_tracing_field(p, cfg);
  Vector z0(p.start);
  z0.push_back(0.0);
  return ode_solve(f, Vector{}, z0, 0.0, 1.0, config);
}

}  // namespace sann
