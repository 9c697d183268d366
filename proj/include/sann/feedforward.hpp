#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sann/linalg.hpp"
#include "sann/random.hpp"

namespace sann {

// Dense network: ReLU after every layer but the last.
struct FeedForward {
  std::vector<std::size_t> widths;  // input, hidden..., output
  std::vector<Matrix> w;
  std::vector<Vector> b;

  std::size_t parameter_count() const;
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  FeedForward zeros_like() const;
};

FeedForward make_feedforward_zero(std::span<const std::size_t> widths);
// Glorot-uniform weights, zero biases.
FeedForward make_feedforward(std::span<const std::size_t> widths, Rng& rng);

// (in + 1) * h1 + (h1 + 1) * h2 + ...
std::size_t feedforward_parameter_count(std::span<const std::size_t> widths);

Vector feedforward_forward(const FeedForward& net, std::span<const double> x);

// ||y* - f(x)||^2; adds seed * gradient into grads when non-null.
double feedforward_loss_and_grad(const FeedForward& net, std::span<const double> x,
                                 std::span<const double> y_star, FeedForward* grads,
                                 double seed = 1.0);

}  // namespace sann
