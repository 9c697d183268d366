#include "sann/sann_core.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace sann {

const char* scheme_name(Scheme s) { return s == Scheme::kEuler ? "euler" : "rk4"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::kEuler;
  if (name == "rk4") return Scheme::kRk4;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected euler or rk4)");
}

void SannConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("SannConfig: steps must be >= 1");
  if (!(c_max >= 0.0)) throw std::invalid_argument("SannConfig: c_max must be >= 0");
  if (!(eps_sing > 0.0)) throw std::invalid_argument("SannConfig: eps_sing must be > 0");
}

NonFiniteStateError::NonFiniteStateError(std::size_t step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

Vector clamp(std::span<const double> v, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::min(std::max(v[i], lo), hi);
  return out;
}

Vector clamp_sol(const Matrix& m, std::span<const double> b, double c_max, double eps_sing) {
  if (!m.square() || m.rows() != b.size()) throw DimensionError("clamp_sol: shape mismatch");
  const LuFactorization f = lu_factor(m, eps_sing);
  if (f.singular) return Vector(b.size(), 0.0);
  return clamp(lu_solve(f, b), -c_max, c_max);
}

Vector field_velocity(const VectorFieldProgram& field, std::span<const double> x,
                      std::span<const double> z, double s, const SannConfig& config,
                      std::size_t step) {
  FieldOutput out = field.eval(x, z, s);
  if (!all_finite(out.m.data()) || !all_finite(out.b)) {
    throw NonFiniteStateError(step, "field returned a non-finite M or b at s = " +
                                        std::to_string(s));
  }
  Vector v = clamp_sol(out.m, out.b, config.c_max, config.eps_sing);
  if (!all_finite(v)) throw NonFiniteStateError(step, "non-finite velocity");
  return v;
}

Trajectory ode_solve(const VectorFieldProgram& field, std::span<const double> x,
                     std::span<const double> z0, double s0, double s_final,
                     const SannConfig& config) {
  config.validate();
  if (!(s0 < s_final)) throw std::invalid_argument("ode_solve: need s0 < s_final");
  const std::size_t d = field.dims().state_dim();
  if (z0.size() != d) throw DimensionError("ode_solve: z0 has the wrong length");
  if (x.size() != field.dims().m) throw DimensionError("ode_solve: x has the wrong length");
  if (!all_finite(z0)) throw NonFiniteStateError(0, "non-finite initial state");

  Trajectory traj;
  traj.config = config;
  traj.s0 = s0;
  traj.s_final = s_final;
  const std::size_t n_steps = config.steps;
  const double h = (s_final - s0) / static_cast<double>(n_steps);
  if (config.record_trajectory) traj.states.reserve(n_steps + 1);

  Vector z(z0.begin(), z0.end());
  Vector tmp(d);
  for (std::size_t j = 0; j < n_steps; ++j) {
    const double s = s0 + static_cast<double>(j) * h;
    Vector k1 = field_velocity(field, x, z, s, config, j);
    if (config.scheme == Scheme::kEuler) {
      for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + h * k1[i];
    } else {
      const double half = 0.5 * h;
      Vector stage(d);
      for (std::size_t i = 0; i < d; ++i) stage[i] = z[i] + half * k1[i];
      const Vector k2 = field_velocity(field, x, stage, s + half, config, j);
      for (std::size_t i = 0; i < d; ++i) stage[i] = z[i] + half * k2[i];
      const Vector k3 = field_velocity(field, x, stage, s + half, config, j);
      for (std::size_t i = 0; i < d; ++i) stage[i] = z[i] + h * k3[i];
      const Vector k4 = field_velocity(field, x, stage, s + h, config, j);
      for (std::size_t i = 0; i < d; ++i) {
        tmp[i] = z[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
    }
    if (!all_finite(tmp)) throw NonFiniteStateError(j, "state became non-finite");
    if (config.record_trajectory) traj.states.push_back({s, z, std::move(k1)});
    z.swap(tmp);
  }
  if (config.record_trajectory) {
    Vector last = field_velocity(field, x, z, s_final, config, n_steps);
    traj.states.push_back({s_final, z, std::move(last)});
  }
  traj.final_state = std::move(z);
  return traj;
}

Vector sann_eval(const VectorFieldProgram& field, std::span<const double> x,
                 const SannConfig& config) {
  const Vector z0(field.dims().state_dim(), 0.0);
  SannConfig cfg = config;
  cfg.record_trajectory = false;
  const Trajectory traj = ode_solve(field, x, z0, 0.0, 1.0, cfg);
  return Vector(traj.final_state.begin(),
                traj.final_state.begin() + static_cast<std::ptrdiff_t>(field.dims().n));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t d = traj.final_state.size();
  os << "step,s";
  for (std::size_t i = 0; i < d; ++i) os << ",z_" << i;
  for (std::size_t i = 0; i < d; ++i) os << ",zdot_" << i;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    const TrajectoryState& st = traj.states[j];
    os << j;
    put(st.s);
    for (double v : st.z) put(v);
    for (double v : st.zdot) put(v);
    os << '\n';
  }
}

}  // namespace sann
