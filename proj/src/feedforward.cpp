#include "sann/feedforward.hpp"

#include <cmath>

#include "sann/autodiff.hpp"

namespace sann {

std::size_t FeedForward::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors()) total += t.size();
  return total;
}

std::vector<std::span<double>> FeedForward::tensors() {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < w.size(); ++l) {
    out.emplace_back(w[l].data());
    out.emplace_back(b[l]);
  }
  return out;
}

std::vector<std::span<const double>> FeedForward::tensors() const {
  std::vector<std::span<const double>> out;
  for (std::size_t l = 0; l < w.size(); ++l) {
    out.emplace_back(w[l].data());
    out.emplace_back(b[l]);
  }
  return out;
}

FeedForward FeedForward::zeros_like() const { return make_feedforward_zero(widths); }

std::size_t feedforward_parameter_count(std::span<const std::size_t> widths) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) total += (widths[l] + 1) * widths[l + 1];
  return total;
}

FeedForward make_feedforward_zero(std::span<const std::size_t> widths) {
  if (widths.size() < 2) throw DimensionError("feedforward: need input and output widths");
  FeedForward net;
  net.widths.assign(widths.begin(), widths.end());
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] == 0 || widths[l + 1] == 0) throw DimensionError("feedforward: zero width");
    net.w.emplace_back(widths[l + 1], widths[l]);
    net.b.emplace_back(widths[l + 1], 0.0);
  }
  return net;
}

FeedForward make_feedforward(std::span<const std::size_t> widths, Rng& rng) {
  FeedForward net = make_feedforward_zero(widths);
  for (auto& m : net.w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
  }
  return net;
}

Vector feedforward_forward(const FeedForward& net, std::span<const double> x) {
  if (x.size() != net.widths.front()) throw DimensionError("feedforward: input width mismatch");
  Vector h(x.begin(), x.end());
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    Vector out(net.b[l].size());
    detail::affine_into(out, net.b[l], net.w[l].data(), h, {}, {});
    if (l + 1 < net.w.size()) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
    h = std::move(out);
  }
  return h;
}

double feedforward_loss_and_grad(const FeedForward& net, std::span<const double> x,
                                 std::span<const double> y_star, FeedForward* grads, double seed) {
  if (y_star.size() != net.widths.back()) throw DimensionError("feedforward: target width");
  if (x.size() != net.widths.front()) throw DimensionError("feedforward: input width mismatch");
  FeedForward scratch;
  FeedForward* sink = grads;
  if (!sink) {
    scratch = net.zeros_like();
    sink = &scratch;
  }
  Tape tape;
  Tape::Id h = tape.constant(Vector(x.begin(), x.end()), x.size());
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    const Tape::Id w = tape.param(net.w[l].data(), sink->w[l].data(), net.w[l].rows(), net.w[l].cols());
    const Tape::Id b = tape.param(net.b[l], sink->b[l], net.b[l].size());
    h = tape.affine(b, w, h, Tape::kNone, Tape::kNone);
    if (l + 1 < net.w.size()) h = tape.relu(h);
  }
  const Tape::Id loss = tape.sq_dist(h, y_star);
  if (grads) tape.backward(loss, seed);
  return tape.scalar(loss);
}

}  // namespace sann
