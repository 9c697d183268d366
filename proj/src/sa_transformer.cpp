#include "sann/sa_transformer.hpp"

#include <algorithm>
#include <cmath>

namespace sann {

double saxp(double x) {
  if (x >= 0.0) return x * x + x + 1.0;
  return 1.0 / (x * x - x + 1.0);
}

namespace {

template <typename F>
Matrix normalize_rows(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out(i, j) = f(x(i, j));
      sum += out(i, j);
    }
    for (double& v : out.row(i)) v /= sum;
  }
  return out;
}

}  // namespace

Matrix sargmax(const Matrix& x) { return normalize_rows(x, saxp); }

Matrix softmax(const Matrix& x) {
  Matrix shifted = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double m = row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
    for (double& v : shifted.row(i)) v -= m;
  }
  return normalize_rows(shifted, [](double v) { return std::exp(v); });
}

void AttentionHeadParams::validate() const {
  if (key.rows() < 1) throw DimensionError("attention: key dimension k must be >= 1");
  if (query.rows() != key.rows() || query.cols() != key.cols())
    throw DimensionError("attention: query and key shapes differ");
  if (value.cols() != key.cols()) throw DimensionError("attention: value has wrong input width");
}

Matrix attention(const AttentionHeadParams& h, const Matrix& x) {
  h.validate();
  if (x.rows() != h.key.cols()) {
    throw DimensionError("attention: input has " + std::to_string(x.rows()) +
                         " features, expected " + std::to_string(h.key.cols()));
  }
  const Matrix qx = matmul(h.query, x);
  const Matrix kx = matmul(h.key, x);
  Matrix scores = matmul(transpose(qx), kx);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h.key.rows()));
  for (double& v : scores.data()) v *= scale;
  return matmul(matmul(h.value, x), sargmax(scores));
}

Matrix matt(const TransformerBlockParams& p, const Matrix& x) {
  Matrix out = x;
  for (const auto& head : p.heads) {
    const Matrix mixed = matmul(head.w, attention(head.theta, x));
    if (mixed.rows() != x.rows() || mixed.cols() != x.cols())
      throw DimensionError("matt: head output does not match the skip connection");
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += mixed.data()[i];
  }
  return out;
}

Matrix mlp(const Matrix& w, std::span<const double> b, const Matrix& x) {
  if (b.size() != w.rows()) throw DimensionError("mlp: bias length mismatch");
  Matrix out = matmul(w, x);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (double& v : out.row(i)) v = std::max(v + b[i], 0.0);
  return out;
}

Matrix layer_norm(const Matrix& x, double eps) {
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= n;
    double var = 0.0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (row[j] - mu) * inv;
  }
  return out;
}

Matrix transformer_block(const TransformerBlockParams& p, const Matrix& x) {
  const Matrix h = matt(p, layer_norm(x, p.eps_ln));
  return mlp(p.mlp_w, p.mlp_b, layer_norm(h, p.eps_ln));
}

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : m.data()) v = sd * rng.normal();
  return m;
}

}  // namespace

TransformerBlockParams random_block(const TransformerDims& dims, Rng& rng) {
  TransformerBlockParams p;
  for (std::size_t h = 0; h < dims.heads; ++h) {
    AttentionHead head;
    head.theta.key = gaussian(dims.k, dims.d_in, rng);
    head.theta.query = gaussian(dims.k, dims.d_in, rng);
    head.theta.value = gaussian(dims.d_head, dims.d_in, rng);
    head.w = gaussian(dims.d_in, dims.d_head, rng);
    p.heads.push_back(std::move(head));
  }
  p.mlp_w = gaussian(dims.d_in, dims.d_in, rng);
  p.mlp_b.resize(dims.d_in);
  for (double& v : p.mlp_b) v = 0.1 * rng.normal();
  return p;
}

}  // namespace sann
