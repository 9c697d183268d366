#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sann {

using Vector = std::vector<double>;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a caller breaks a documented precondition that is not a shape
// problem (e.g. solving with a factorization flagged singular).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

inline constexpr double kDefaultSingularTol = 1e-12;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Takes ownership of `data`; throws DimensionError on a size mismatch and
  // std::domain_error on non-finite entries.
  Matrix(std::size_t rows, std::size_t cols, Vector data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const Vector& storage() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

Vector matvec(const Matrix& a, std::span<const double> x);
Vector matvec_transpose(const Matrix& a, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Induced infinity norm (max absolute row sum).
double norm_inf(const Matrix& a);
double norm_inf(std::span<const double> v);
double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> v);

struct LuFactorization {
  Matrix lu;                       // unit-lower L below the diagonal, U on and above
  std::vector<std::size_t> pivots; // pivots[i] = original row now in position i
  int permutation_sign = 1;
  bool singular = false;
  double min_pivot_mag = 0.0;
};

// PA = LU with partial pivoting. The factorization is flagged singular when
// min |pivot| <= eps_sing * max(1, ||M||_inf).
LuFactorization lu_factor(const Matrix& m, double eps_sing = kDefaultSingularTol);

// Solves M x = b. Throws ContractViolation on a singular factorization.
Vector lu_solve(const LuFactorization& f, std::span<const double> b);

// Solves M^T x = b with the same factorization.
Vector lu_solve_transpose(const LuFactorization& f, std::span<const double> b);

// Product of the pivots times the permutation sign; 0 when flagged singular.
double determinant(const LuFactorization& f);

// (I_blocks (x) X) h without forming the Kronecker product.
Vector kron_apply(const Matrix& x, std::span<const double> h, std::size_t blocks);

// (I_blocks (x) X)^T g = (I_blocks (x) X^T) g.
Vector kron_apply_transpose(const Matrix& x, std::span<const double> g, std::size_t blocks);

namespace detail {

// out = bias + a*h + bmul*u, accumulated row by row in a fixed order. Either
// matrix may have zero columns. Shared by the plain and the taped MRNN paths so
// that both produce bit-identical values.
// `a` is out.size() x h.size() and `bmul` is out.size() x u.size(), row-major.
void affine_into(std::span<double> out, std::span<const double> bias, std::span<const double> a,
                 std::span<const double> h, std::span<const double> bmul,
                 std::span<const double> u);

void kron_apply_into(std::span<double> out, std::span<const double> x, std::size_t x_rows,
                     std::size_t x_cols, std::span<const double> h, std::size_t blocks);

}  // namespace detail

}  // namespace sann
