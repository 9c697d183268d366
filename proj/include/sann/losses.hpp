#pragma once

#include <span>

#include "sann/autodiff.hpp"
#include "sann/sann_core.hpp"

namespace sann {

// ||y* - y_N||^2 with y the first y_star.size() state components.
double accuracy_loss(const Trajectory& traj, std::span<const double> y_star);

// (1/N) sum_{j=1..N} ||y* - (y_j + (1 - j/N) ydot_j)||^2. Needs a recorded
// trajectory; throws std::invalid_argument otherwise.
double direction_loss(const Trajectory& traj, std::span<const double> y_star);

double total_loss(const Trajectory& traj, std::span<const double> y_star,
                  const LossWeights& w = {});

}  // namespace sann
