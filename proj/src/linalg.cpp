#include "sann/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sann {

namespace {

std::string shape(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: " + std::to_string(data_.size()) + " values for shape " +
                         shape(rows_, cols_));
  }
  if (!all_finite(data_)) throw std::domain_error("Matrix: non-finite entry");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite(data_)) throw std::domain_error("Matrix: non-finite entry");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) {
    throw DimensionError("matvec: " + shape(a.rows(), a.cols()) + " times length " +
                         std::to_string(x.size()));
  }
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    const auto row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

Vector matvec_transpose(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) throw DimensionError("matvec_transpose: length mismatch");
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += row[j] * x[i];
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape(a.rows(), a.cols()) + " times " +
                         shape(b.rows(), b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double norm_inf(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (double v : a.row(i)) sum += std::abs(v);
    best = std::max(best, sum);
  }
  return best;
}

double norm_inf(std::span<const double> v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

LuFactorization lu_factor(const Matrix& m, double eps_sing) {
  if (!m.square()) throw DimensionError("lu_factor: non-square " + shape(m.rows(), m.cols()));
  const std::size_t n = m.rows();
  LuFactorization f;
  f.lu = m;
  f.pivots.resize(n);
  std::iota(f.pivots.begin(), f.pivots.end(), std::size_t{0});
  f.min_pivot_mag = n == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  Matrix& a = f.lu;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (p != k) {
      std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(p).begin());
      std::swap(f.pivots[k], f.pivots[p]);
      f.permutation_sign = -f.permutation_sign;
    }
    f.min_pivot_mag = std::min(f.min_pivot_mag, best);
    const double pivot = a(k, k);
    if (pivot == 0.0) continue;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = a(i, k) / pivot;
      a(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
    }
  }
  f.singular = n > 0 && f.min_pivot_mag <= eps_sing * std::max(1.0, norm_inf(m));
  return f;
}

Vector lu_solve(const LuFactorization& f, std::span<const double> b) {
  const std::size_t n = f.lu.rows();
  if (b.size() != n) throw DimensionError("lu_solve: rhs length mismatch");
  if (f.singular) throw ContractViolation("lu_solve: factorization is singular");
  const Matrix& a = f.lu;
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[f.pivots[i]];
    for (std::size_t j = 0; j < i; ++j) acc -= a(i, j) * x[j];
    x[i] = acc;
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = x[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= a(i, j) * x[j];
    x[i] = acc / a(i, i);
  }
  return x;
}

Vector lu_solve_transpose(const LuFactorization& f, std::span<const double> b) {
  const std::size_t n = f.lu.rows();
  if (b.size() != n) throw DimensionError("lu_solve_transpose: rhs length mismatch");
  if (f.singular) throw ContractViolation("lu_solve_transpose: factorization is singular");
  const Matrix& a = f.lu;
  // A^T = U^T L^T P: solve U^T w = b, then L^T v = w, then x = P^T v.
  Vector w(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double acc = w[i];
    for (std::size_t j = 0; j < i; ++j) acc -= a(j, i) * w[j];
    w[i] = acc / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = w[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= a(j, i) * w[j];
    w[i] = acc;
  }
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[f.pivots[i]] = w[i];
  return x;
}

double determinant(const LuFactorization& f) {
  if (f.singular) return 0.0;
  double det = f.permutation_sign;
  for (std::size_t i = 0; i < f.lu.rows(); ++i) det *= f.lu(i, i);
  return det;
}

Vector kron_apply(const Matrix& x, std::span<const double> h, std::size_t blocks) {
  if (h.size() != blocks * x.cols()) {
    throw DimensionError("kron_apply: h has length " + std::to_string(h.size()) + ", expected " +
                         std::to_string(blocks) + " blocks of " + std::to_string(x.cols()));
  }
  Vector out(blocks * x.rows());
  detail::kron_apply_into(out, x.data(), x.rows(), x.cols(), h, blocks);
  return out;
}

Vector kron_apply_transpose(const Matrix& x, std::span<const double> g, std::size_t blocks) {
  if (g.size() != blocks * x.rows()) throw DimensionError("kron_apply_transpose: length mismatch");
  Vector out(blocks * x.cols(), 0.0);
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double gi = g[blk * x.rows() + i];
      const auto row = x.row(i);
      for (std::size_t j = 0; j < x.cols(); ++j) out[blk * x.cols() + j] += row[j] * gi;
    }
  }
  return out;
}

namespace detail {

void affine_into(std::span<double> out, std::span<const double> bias, std::span<const double> a,
                 std::span<const double> h, std::span<const double> bmul,
                 std::span<const double> u) {
  const std::size_t rows = out.size();
  const std::size_t hc = h.size();
  const std::size_t uc = u.size();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = bias[i];
    const double* arow = a.data() + i * hc;
    for (std::size_t j = 0; j < hc; ++j) acc += arow[j] * h[j];
    const double* brow = bmul.data() + i * uc;
    for (std::size_t j = 0; j < uc; ++j) acc += brow[j] * u[j];
    out[i] = acc;
  }
}

void kron_apply_into(std::span<double> out, std::span<const double> x, std::size_t x_rows,
                     std::size_t x_cols, std::span<const double> h, std::size_t blocks) {
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const double* hb = h.data() + blk * x_cols;
    for (std::size_t i = 0; i < x_rows; ++i) {
      const double* xr = x.data() + i * x_cols;
      double acc = 0.0;
      for (std::size_t j = 0; j < x_cols; ++j) acc += xr[j] * hb[j];
      out[blk * x_rows + i] = acc;
    }
  }
}

}  // namespace detail

}  // namespace sann
