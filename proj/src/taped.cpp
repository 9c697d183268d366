#include "sann/taped.hpp"

#include <string>

namespace sann {

TapedMrnn register_params(Tape& tape, const MrnnParams& params, MrnnParams& grads) {
  if (grads.layers.size() != params.layers.size()) {
    throw DimensionError("register_params: gradient buffer has the wrong layer count");
  }
  TapedMrnn net;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const MrnnLayer& p = params.layers[l];
    MrnnLayer& g = grads.layers[l];
    auto mat = [&](const Matrix& v, Matrix& gv) {
      return tape.param(v.data(), gv.data(), v.rows(), v.cols());
    };
    auto vec = [&](const Vector& v, Vector& gv) { return tape.param(v, gv, v.size()); };
    net.layers.push_back({mat(p.a0, g.a0), vec(p.b0, g.b0), mat(p.bmul0, g.bmul0),
                          mat(p.a1, g.a1), vec(p.b1, g.b1), mat(p.bmul1, g.bmul1)});
  }
  return net;
}

Tape::Id taped_mrnn_forward(Tape& tape, const MrnnParams& params, TapedMrnn& net,
                            Tape::Id input) {
  if (tape.rows(input) != params.input_rows || tape.cols(input) != params.input_cols) {
    throw DimensionError("taped_mrnn_forward: input has the wrong shape");
  }
  // h_0 = 0, so the first layer is input independent and recorded once.
  if (net.first_layer_output == Tape::kNone) {
    const auto& ids = net.layers.front();
    const Tape::Id pre0 = tape.affine(ids[1], Tape::kNone, Tape::kNone, Tape::kNone, Tape::kNone);
    const Tape::Id pre1 = tape.affine(ids[4], Tape::kNone, Tape::kNone, Tape::kNone, Tape::kNone);
    net.first_layer_output = tape.add(pre0, tape.relu(pre1));
  }
  Tape::Id h = net.first_layer_output;
  for (std::size_t l = 1; l < net.layers.size(); ++l) {
    const auto& ids = net.layers[l];
    const std::size_t blocks = tape.rows(h) / params.input_cols;
    const Tape::Id u = tape.kron_apply(input, h, blocks);
    const Tape::Id pre0 = tape.affine(ids[1], ids[0], h, ids[2], u);
    const Tape::Id pre1 = tape.affine(ids[4], ids[3], h, ids[5], u);
    h = tape.add(pre0, tape.relu(pre1));
  }
  return h;
}

namespace {

Tape::Id velocity(Tape& tape, const IsdNetSpec& spec, const MrnnParams& params, TapedMrnn& net,
                  std::span<const double> x, Tape::Id z, double s, const SannConfig& config,
                  std::size_t step) {
  const std::size_t d = spec.state_dim();
  const Matrix base = pack_input(spec, x, Vector(d, 0.0), s);
  const Tape::Id packed = tape.place_column(tape.constant(base), z, spec.z_column());
  const Tape::Id head = taped_mrnn_forward(tape, params, net, packed);
  if (!all_finite(tape.value(head))) {
    throw NonFiniteStateError(step, "network returned a non-finite M or b at s = " +
                                        std::to_string(s));
  }
  const Tape::Id m = tape.slice(head, 0, d, d);
  const Tape::Id b = tape.slice(head, d * d, d);
  const Tape::Id sol = tape.linear_solve(m, b, config.eps_sing);
  const Tape::Id v = tape.clamp(sol, -config.c_max, config.c_max);
  if (!all_finite(tape.value(v))) throw NonFiniteStateError(step, "non-finite velocity");
  return v;
}

}  // namespace

TapedTrajectory taped_sann_forward(Tape& tape, const IsdNetSpec& spec, const MrnnParams& params,
                                   TapedMrnn& net, std::span<const double> x,
                                   const SannConfig& config) {
  config.validate();
  if (params.output_width() != spec.output_dim()) {
    throw DimensionError("taped_sann_forward: network output width does not match spec");
  }
  const std::size_t d = spec.state_dim();
  const std::size_t n_steps = config.steps;
  const double h = 1.0 / static_cast<double>(n_steps);
  TapedTrajectory traj;
  traj.z.push_back(tape.constant(Vector(d, 0.0), d));
  for (std::size_t j = 0; j < n_steps; ++j) {
    const double s = static_cast<double>(j) * h;
    const Tape::Id z = traj.z.back();
    const Tape::Id k1 = velocity(tape, spec, params, net, x, z, s, config, j);
    Tape::Id next;
    if (config.scheme == Scheme::kEuler) {
      next = tape.axpy(h, k1, z);
    } else {
      const double half = 0.5 * h;
      const Tape::Id k2 =
          velocity(tape, spec, params, net, x, tape.axpy(half, k1, z), s + half, config, j);
      const Tape::Id k3 =
          velocity(tape, spec, params, net, x, tape.axpy(half, k2, z), s + half, config, j);
      const Tape::Id k4 = velocity(tape, spec, params, net, x, tape.axpy(h, k3, z), s + h, config, j);
      const double coeffs[] = {1.0, 2.0, 2.0, 1.0};
      const Tape::Id ks[] = {k1, k2, k3, k4};
      next = tape.axpy(h / 6.0, tape.lincomb(coeffs, ks), z);
    }
    if (!all_finite(tape.value(next))) throw NonFiniteStateError(j, "state became non-finite");
    traj.zdot.push_back(k1);
    traj.z.push_back(next);
  }
  return traj;
}

Tape::Id taped_total_loss(Tape& tape, const TapedTrajectory& traj, std::span<const double> y_star,
                          const LossWeights& w) {
  if (w.lambda < 0.0) throw std::invalid_argument("taped_total_loss: lambda must be >= 0");
  const std::size_t n = y_star.size();
  const std::size_t n_steps = traj.zdot.size();
  const Tape::Id y_final = tape.slice(traj.z.back(), 0, n);
  const Tape::Id acc = tape.sq_dist(y_final, y_star);
  if (w.lambda == 0.0) return acc;
  const double big_n = static_cast<double>(n_steps);
  Vector coeffs{1.0};
  std::vector<Tape::Id> terms{acc};
  for (std::size_t j = 1; j <= n_steps; ++j) {
    const double weight = 1.0 - static_cast<double>(j) / big_n;
    Tape::Id e = tape.slice(traj.z[j], 0, n);
    if (j < n_steps) e = tape.axpy(weight, tape.slice(traj.zdot[j], 0, n), e);
    terms.push_back(tape.sq_dist(e, y_star));
    coeffs.push_back(w.lambda / big_n);
  }
  return tape.lincomb(coeffs, terms);
}

double sann_loss_and_grad(const IsdNetSpec& spec, const MrnnParams& params,
                          std::span<const double> x, std::span<const double> y_star,
                          const SannConfig& config, const LossWeights& w, MrnnParams* grads,
                          double seed) {
  if (y_star.size() != spec.n) throw DimensionError("sann_loss_and_grad: y* must have n entries");
  Tape tape;
  MrnnParams scratch;
  MrnnParams* sink = grads;
  if (!sink) {
    scratch = params.zeros_like();
    sink = &scratch;
  }
  TapedMrnn net = register_params(tape, params, *sink);
  const TapedTrajectory traj = taped_sann_forward(tape, spec, params, net, x, config);
  const Tape::Id loss = taped_total_loss(tape, traj, y_star, w);
  if (grads) tape.backward(loss, seed);
  return tape.scalar(loss);
}

}  // namespace sann
