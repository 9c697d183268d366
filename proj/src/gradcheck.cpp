#include "sann/gradcheck.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "sann/autodiff.hpp"
#include "sann/bench_linear.hpp"
#include "sann/random.hpp"
#include "sann/taped.hpp"

namespace sann {

namespace {

struct Input {
  std::size_t rows;
  std::size_t cols;
};

// Builds the primitive under test from parameter nodes; the harness reduces
// the result to a scalar with sq_dist against a random target.
using Builder = std::function<Tape::Id(Tape&, const std::vector<Tape::Id>&)>;

struct Primitive {
  std::string name;
  std::vector<Input> inputs;
  Builder build;
  // Inputs for which the primitive has a kink (relu, clamp); draws too close
  // to one are rejected.
  bool has_kinks = false;
  // Adds n to the diagonal of the first input to keep solves well posed.
  bool dominant_first = false;
};

std::vector<Primitive> primitives() {
  using Ids = const std::vector<Tape::Id>&;
  std::vector<Primitive> p;
  p.push_back({"matmul", {{3, 4}, {4, 2}}, [](Tape& t, Ids in) { return t.matmul(in[0], in[1]); }});
  p.push_back({"add", {{3, 2}, {3, 2}}, [](Tape& t, Ids in) { return t.add(in[0], in[1]); }});
  p.push_back({"sub", {{3, 2}, {3, 2}}, [](Tape& t, Ids in) { return t.sub(in[0], in[1]); }});
  p.push_back({"scale", {{4, 1}}, [](Tape& t, Ids in) { return t.scale(in[0], -1.7); }});
  p.push_back({"axpy", {{4, 1}, {4, 1}}, [](Tape& t, Ids in) { return t.axpy(0.3, in[0], in[1]); }});
  p.push_back({"hadamard", {{3, 3}, {3, 3}},
               [](Tape& t, Ids in) { return t.hadamard(in[0], in[1]); }});
  p.push_back({"relu", {{6, 1}}, [](Tape& t, Ids in) { return t.relu(in[0]); }, true});
  p.push_back({"clamp", {{6, 1}}, [](Tape& t, Ids in) { return t.clamp(in[0], -0.5, 0.5); },
               true});
  p.push_back({"kron_apply", {{3, 2}, {6, 1}},
               [](Tape& t, Ids in) { return t.kron_apply(in[0], in[1], 3); }});
  p.push_back({"linear_solve", {{4, 4}, {4, 1}},
               [](Tape& t, Ids in) { return t.linear_solve(in[0], in[1]); }, false, true});
  p.push_back({"affine", {{3, 1}, {3, 2}, {2, 1}, {3, 4}, {4, 1}},
               [](Tape& t, Ids in) { return t.affine(in[0], in[1], in[2], in[3], in[4]); }});
  p.push_back({"slice", {{8, 1}}, [](Tape& t, Ids in) { return t.slice(in[0], 2, 5); }});
  p.push_back({"place_column", {{3, 4}, {2, 1}},
               [](Tape& t, Ids in) { return t.place_column(in[0], in[1], 2); }});
  p.push_back({"sum_squares", {{5, 1}}, [](Tape& t, Ids in) { return t.sum_squares(in[0]); }});
  p.push_back({"lincomb", {{3, 1}, {3, 1}, {3, 1}}, [](Tape& t, Ids in) {
                 const double c[] = {1.0, -2.0, 0.5};
                 return t.lincomb(c, in);
               }});
  return p;
}

struct Eval {
  double loss;
  double margin;
};

Eval eval_primitive(const Primitive& prim, const std::vector<Vector>& vals,
                    std::vector<Vector>* grads, std::span<const double> target) {
  Tape tape;
  std::vector<Vector> sink(vals.size());
  std::vector<Tape::Id> ids;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    sink[i].assign(vals[i].size(), 0.0);
    ids.push_back(tape.param(vals[i], sink[i], prim.inputs[i].rows, prim.inputs[i].cols));
  }
  const Tape::Id out = prim.build(tape, ids);
  const Tape::Id loss = tape.sq_dist(out, target.first(tape.rows(out) * tape.cols(out)));
  if (grads) {
    tape.backward(loss);
    *grads = sink;
  }
  return {tape.scalar(loss), tape.min_kink_margin()};
}

GradCheckEntry check_primitive(const Primitive& prim, const GradCheckOptions& opts, Rng& rng) {
  GradCheckEntry entry{prim.name};
  Vector target(64);
  while (entry.trials < opts.trials) {
    std::vector<Vector> vals;
    for (const auto& in : prim.inputs) {
      Vector v(in.rows * in.cols);
      for (double& x : v) x = rng.uniform(-1.0, 1.0);
      vals.push_back(std::move(v));
    }
    if (prim.dominant_first) {
      const std::size_t n = prim.inputs[0].rows;
      for (std::size_t i = 0; i < n; ++i) vals[0][i * n + i] += static_cast<double>(n);
    }
    for (double& x : target) x = rng.uniform(-1.0, 1.0);

    std::vector<Vector> grads;
    const Eval base = eval_primitive(prim, vals, &grads, target);
    if (prim.has_kinks && base.margin < opts.kink_margin) {
      ++entry.redraws;
      if (entry.redraws > 100 * opts.trials) throw std::runtime_error("gradcheck: too many redraws");
      continue;
    }
    for (std::size_t k = 0; k < vals.size(); ++k) {
      auto f = [&](std::span<const double> theta) {
        std::vector<Vector> probe = vals;
        probe[k].assign(theta.begin(), theta.end());
        return eval_primitive(prim, probe, nullptr, target).loss;
      };
      entry.max_rel_error =
          std::max(entry.max_rel_error, finite_diff_check(f, vals[k], grads[k], opts.step));
    }
    ++entry.trials;
  }
  return entry;
}

Vector flatten(const MrnnParams& p) {
  Vector out;
  for (auto t : p.tensors()) out.insert(out.end(), t.begin(), t.end());
  return out;
}

void unflatten(MrnnParams& p, std::span<const double> flat) {
  std::size_t off = 0;
  for (auto t : p.tensors()) {
    std::copy_n(flat.begin() + off, t.size(), t.begin());
    off += t.size();
  }
}

GradCheckEntry check_end_to_end(const GradCheckOptions& opts, Rng& rng) {
  GradCheckEntry entry{"sann_total_loss"};
  const std::size_t n = 3;
  const IsdNetSpec spec = IsdNetSpec::linear_solve(n);
  const std::vector<std::size_t> widths{2 * spec.packed_cols()};
  SannConfig cfg;
  cfg.steps = 5;
  const LossWeights w{0.5};

  while (entry.trials < opts.trials) {
    // A larger head scale makes M nearly singular on some draws, where the
    // loss curvature swamps central differences at any usable step.
    MrnnParams params = make_mrnn(spec, widths, rng, 0.1);
    const Sample s = to_sample(gen_dd_system(n, rng));
    MrnnParams grads = params.zeros_like();

    Tape tape;
    TapedMrnn net = register_params(tape, params, grads);
    const TapedTrajectory traj = taped_sann_forward(tape, spec, params, net, s.x, cfg);
    const Tape::Id loss = taped_total_loss(tape, traj, s.y, w);
    if (tape.min_kink_margin() < opts.kink_margin) {
      ++entry.redraws;
      if (entry.redraws > 100 * opts.trials) throw std::runtime_error("gradcheck: too many redraws");
      continue;
    }
    tape.backward(loss);

    const Vector theta = flatten(params);
    const Vector analytic = flatten(grads);
    MrnnParams probe = params;
    auto f = [&](std::span<const double> th) {
      unflatten(probe, th);
      return sann_loss_and_grad(spec, probe, s.x, s.y, cfg, w, nullptr);
    };
    entry.max_rel_error =
        std::max(entry.max_rel_error, finite_diff_check(f, theta, analytic, opts.step));
    ++entry.trials;
  }
  return entry;
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck(const GradCheckOptions& opts) {
  Rng rng(opts.seed);
  std::vector<GradCheckEntry> out;
  for (const auto& prim : primitives()) out.push_back(check_primitive(prim, opts, rng));
  out.push_back(check_end_to_end(opts, rng));
  return out;
}

}  // namespace sann
