#include "sann/losses.hpp"

namespace sann {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double accuracy_loss(const Trajectory& traj, std::span<const double> y_star) {
  if (traj.final_state.size() < y_star.size()) throw DimensionError("accuracy_loss: y* too long");
  return sq_dist(traj.final_state, y_star);
}

double direction_loss(const Trajectory& traj, std::span<const double> y_star) {
  const std::size_t steps = traj.config.steps;
  if (traj.states.size() != steps + 1) {
    throw std::invalid_argument("direction_loss: trajectory was not recorded");
  }
  const std::size_t n = y_star.size();
  if (traj.final_state.size() < n) throw DimensionError("direction_loss: y* too long");
  const double big_n = static_cast<double>(steps);
  double acc = 0.0;
  Vector e(n);
  for (std::size_t j = 1; j <= steps; ++j) {
    const TrajectoryState& st = traj.states[j];
    if (st.zdot.size() < n) throw std::invalid_argument("direction_loss: missing velocities");
    const double w = 1.0 - static_cast<double>(j) / big_n;
    for (std::size_t i = 0; i < n; ++i) e[i] = st.z[i] + w * st.zdot[i];
    acc += sq_dist(e, y_star);
  }
  return acc / big_n;
}

double total_loss(const Trajectory& traj, std::span<const double> y_star, const LossWeights& w) {
  if (w.lambda < 0.0) throw std::invalid_argument("total_loss: lambda must be >= 0");
  const double acc = accuracy_loss(traj, y_star);
  if (w.lambda == 0.0) return acc;
  return acc + w.lambda * direction_loss(traj, y_star);
}

}  // namespace sann
