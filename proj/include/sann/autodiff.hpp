#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sann/linalg.hpp"

namespace sann {

struct TapeUsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// Append-only record of vector/matrix operations for reverse-mode
// differentiation. Every value is a row-major array with a (rows, cols) shape;
// vectors have cols = 1. Parameters are referenced, not copied: their values
// must outlive the tape and their gradients accumulate into caller buffers.
class Tape {
 public:
  using Id = std::uint32_t;
  static constexpr Id kNone = std::numeric_limits<Id>::max();

  Tape();
  ~Tape();
  Tape(Tape&&) noexcept;
  Tape& operator=(Tape&&) noexcept;

  Id constant(Vector value, std::size_t rows, std::size_t cols = 1);
  Id constant(const Matrix& m);
  Id param(std::span<const double> value, std::span<double> grad, std::size_t rows,
           std::size_t cols = 1);

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id scale(Id a, double c);
  // y + c x
  Id axpy(double c, Id x, Id y);
  Id hadamard(Id a, Id b);
  // Subgradient 0 at x = 0.
  Id relu(Id a);
  // Gradient 1 on [lo, hi] including the bounds, 0 strictly outside.
  Id clamp(Id a, double lo, double hi);
  // (I_blocks (x) X) h with X the value of x.
  Id kron_apply(Id x, Id h, std::size_t blocks);
  // M^-1 b, or 0 with no gradient when M is flagged singular.
  Id linear_solve(Id m, Id b, double eps_sing = kDefaultSingularTol);
  bool solve_was_singular(Id solve) const;
  // bias + A h + B u, the MRNN preactivation. bmul and u may be kNone, and
  // a and h may be kNone when the layer has no input.
  Id affine(Id bias, Id a, Id h, Id bmul, Id u);
  Id slice(Id a, std::size_t offset, std::size_t rows, std::size_t cols = 1);
  // Copy of base with column `col` overwritten by v (v may be shorter than a column).
  Id place_column(Id base, Id v, std::size_t col);
  // Scalar sum_i (a_i - target_i)^2.
  Id sq_dist(Id a, std::span<const double> target);
  Id sum_squares(Id a);
  // sum_k coeffs[k] * ids[k], all of one shape; accumulated left to right.
  Id lincomb(std::span<const double> coeffs, std::span<const Id> ids);

  std::span<const double> value(Id id) const;
  double scalar(Id id) const;
  std::size_t rows(Id id) const;
  std::size_t cols(Id id) const;
  std::size_t size() const;

  // Reverse pass from a scalar node with cotangent `seed`. Parameter
  // gradients are added into their buffers.
  void backward(Id root, double seed = 1.0);
  // Cotangent of a node after backward(); throws TapeUsageError before.
  std::span<const double> grad(Id id) const;

  // Smallest distance of any ReLU or clamp input to its kink, for finite
  // difference checks that must avoid non-differentiable points.
  double min_kink_margin() const { return min_kink_margin_; }

 private:
  struct Node;
  Id push(Node node);
  const Node& node(Id id) const;
  double* grad_buffer(Id id);

  std::vector<Node> nodes_;
  std::vector<Vector> grads_;
  bool backward_done_ = false;
  double min_kink_margin_ = std::numeric_limits<double>::infinity();
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameter arrays.
class Adam {
 public:
  Adam(AdamConfig config, const std::vector<std::size_t>& sizes);

  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads);

  std::uint64_t steps_taken() const { return t_; }
  void set_lr(double lr) { config_.lr = lr; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Vector> m_;
  std::vector<Vector> v_;
  std::uint64_t t_ = 0;
};

struct LossWeights {
  double lambda = 1e-2;
};

// max_i |analytic_i - fd_i| / max(1, |analytic_i|) with central differences
// of step h. `coords` restricts the check to a subset of coordinates.
double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> theta, std::span<const double> analytic,
                         double h = 1e-5, std::span<const std::size_t> coords = {});

}  // namespace sann
