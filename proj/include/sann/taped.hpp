#pragma once

#include <array>
#include <span>
#include <vector>

#include "sann/autodiff.hpp"
#include "sann/isd_net.hpp"
#include "sann/sann_core.hpp"

namespace sann {

// Tape ids of one network's weights, in MrnnParams::tensors() order.
struct TapedMrnn {
  std::vector<std::array<Tape::Id, 6>> layers;
  Tape::Id first_layer_output = Tape::kNone;
};

// Records params on the tape; gradients accumulate into `grads`, which must
// have the same shapes (e.g. params.zeros_like()).
TapedMrnn register_params(Tape& tape, const MrnnParams& params, MrnnParams& grads);

// Same arithmetic as mrnn_forward, so values agree bit for bit.
Tape::Id taped_mrnn_forward(Tape& tape, const MrnnParams& params, TapedMrnn& net,
                            Tape::Id input);

struct TapedTrajectory {
  std::vector<Tape::Id> z;     // N + 1 states
  std::vector<Tape::Id> zdot;  // N velocities, zdot[j] drives step j (first stage for rk4)
};

// Differentiable SANN solve from z(0) = 0 over [0, 1]. Matches ode_solve's
// arithmetic; throws NonFiniteStateError like ode_solve.
TapedTrajectory taped_sann_forward(Tape& tape, const IsdNetSpec& spec, const MrnnParams& params,
                                   TapedMrnn& net, std::span<const double> x,
                                   const SannConfig& config);

// accuracy + lambda * direction loss as a scalar node.
Tape::Id taped_total_loss(Tape& tape, const TapedTrajectory& traj, std::span<const double> y_star,
                          const LossWeights& w);

// Loss of one sample; when grads is non-null adds seed * d(loss)/d(params).
double sann_loss_and_grad(const IsdNetSpec& spec, const MrnnParams& params,
                          std::span<const double> x, std::span<const double> y_star,
                          const SannConfig& config, const LossWeights& w, MrnnParams* grads,
                          double seed = 1.0);

}  // namespace sann
