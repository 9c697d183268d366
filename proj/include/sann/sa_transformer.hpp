#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sann/linalg.hpp"
#include "sann/random.hpp"

namespace sann {

// Piecewise-rational stand-in for exp: x^2 + x + 1 for x >= 0 and
// 1 / (x^2 - x + 1) below zero. Agrees with exp to first order at 0.
double saxp(double x);

// Row-wise saxp normalization; every row sums to one. Any shape is accepted.
Matrix sargmax(const Matrix& x);

// Row-wise exp normalization, for comparison.
Matrix softmax(const Matrix& x);

struct AttentionHeadParams {
  Matrix key;    // k x d_in
  Matrix query;  // k x d_in
  Matrix value;  // d_head x d_in

  void validate() const;
};

// V X SArgMax(X^T Q^T K X / sqrt(k)) for X of shape d_in x tokens.
Matrix attention(const AttentionHeadParams& h, const Matrix& x);

struct AttentionHead {
  Matrix w;  // d_in x d_head, mixes the head back into the residual stream
  AttentionHeadParams theta;
};

struct TransformerBlockParams {
  std::vector<AttentionHead> heads;
  Matrix mlp_w;  // d_in x d_in
  Vector mlp_b;  // d_in, added to every token
  double eps_ln = 1e-6;
};

// X + sum_h W^h Att_h(X).
Matrix matt(const TransformerBlockParams& p, const Matrix& x);

// ReLU(W X + B) with B broadcast over the token columns.
Matrix mlp(const Matrix& w, std::span<const double> b, const Matrix& x);

// Each row becomes (x - mean) / sqrt(var + eps), with the population variance.
Matrix layer_norm(const Matrix& x, double eps);

// layer_norm -> matt -> layer_norm -> mlp.
Matrix transformer_block(const TransformerBlockParams& p, const Matrix& x);

struct TransformerDims {
  std::size_t d_in = 8;
  std::size_t d_head = 8;
  std::size_t k = 8;
  std::size_t heads = 2;
};

// Entries N(0, 1 / fan_in).
TransformerBlockParams random_block(const TransformerDims& dims, Rng& rng);

}  // namespace sann
