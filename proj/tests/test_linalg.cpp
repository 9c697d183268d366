#include <gtest/gtest.h>

#include <cmath>

#include "sann/linalg.hpp"
#include "sann/random.hpp"

namespace sann {
namespace {

// Laplace expansion along the first row.
double cofactor_det(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    Matrix minor(n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t jj = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, jj++) = m(i, j);
      }
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * m(0, c) * cofactor_det(minor);
  }
  return det;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Random matrix with a boosted diagonal, comfortably nonsingular.
Matrix well_conditioned(std::size_t n, Rng& rng) {
  Matrix m = random_matrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += (rng.uniform01() < 0.5 ? -1.0 : 1.0) * (n + 1.0);
  return m;
}

TEST(Matrix, RejectsNonFiniteAndBadSizes) {
  EXPECT_THROW(Matrix(2, 2, Vector{1, 2, 3}), DimensionError);
  EXPECT_THROW(Matrix(1, 1, Vector{NAN}), std::domain_error);
}

TEST(LuFactor, Identity) {
  const auto f = lu_factor(Matrix::identity(3));
  EXPECT_FALSE(f.singular);
  EXPECT_EQ(f.min_pivot_mag, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(f.pivots[i], i);
  EXPECT_EQ(determinant(f), 1.0);
}

TEST(LuFactor, ZeroMatrixIsSingular) {
  const auto f = lu_factor(Matrix(2, 2));
  EXPECT_TRUE(f.singular);
  EXPECT_EQ(determinant(f), 0.0);
  EXPECT_THROW(lu_solve(f, Vector{1, 1}), ContractViolation);
}

TEST(LuFactor, NonSquareThrows) { EXPECT_THROW(lu_factor(Matrix(2, 3)), DimensionError); }

TEST(LuFactor, SingularThresholdIsScaleAware) {
  // Pivot 1e-13 on a matrix of norm 1e3: below 1e-12 * 1e3.
  Matrix m{{1e3, 0}, {0, 1e-10}};
  EXPECT_TRUE(lu_factor(m).singular);
  Matrix ok{{1e3, 0}, {0, 1e-8}};
  EXPECT_FALSE(lu_factor(ok).singular);
}

TEST(LuFactor, PivotsArePermutation) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto f = lu_factor(random_matrix(6, 6, rng));
    std::vector<bool> seen(6, false);
    for (auto p : f.pivots) {
      ASSERT_LT(p, 6u);
      EXPECT_FALSE(seen[p]);
      seen[p] = true;
    }
  }
}

TEST(Determinant, RowSwapGivesMinusOne) {
  Matrix p{{0, 1, 0}, {1, 0, 0}, {0, 0, 1}};
  EXPECT_EQ(determinant(lu_factor(p)), -1.0);
}

TEST(Determinant, MatchesCofactorOracle) {
  Rng rng(11);
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int t = 0; t < 40; ++t) {
      const Matrix m = random_matrix(n, n, rng);
      const double want = cofactor_det(m);
      const double got = determinant(lu_factor(m));
      const double tol = n <= 4 ? 1e-12 : 1e-10;
      EXPECT_NEAR(got, want, tol * std::max(1e-3, std::abs(want))) << "n=" << n;
    }
  }
}

TEST(LuSolve, TrivialCases) {
  EXPECT_EQ(lu_solve(lu_factor(Matrix::identity(2)), Vector{1, 2}), (Vector{1, 2}));
  const Vector d{2, 4};
  EXPECT_EQ(lu_solve(lu_factor(Matrix::diagonal(d)), Vector{2, 4}), (Vector{1, 1}));
}

TEST(LuSolve, MatchesCramerOracle) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = well_conditioned(5, rng);
    Vector b(5);
    for (double& v : b) v = rng.uniform(-1, 1);
    const double det = cofactor_det(m);
    const Vector x = lu_solve(lu_factor(m), b);
    for (std::size_t c = 0; c < 5; ++c) {
      Matrix mc = m;
      for (std::size_t i = 0; i < 5; ++i) mc(i, c) = b[i];
      const double want = cofactor_det(mc) / det;
      EXPECT_NEAR(x[c], want, 1e-10 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(LuSolve, ResidualBoundOnRandomInstances) {
  Rng rng(17);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + t % 20;
    const Matrix m = well_conditioned(n, rng);
    Vector b(n);
    for (double& v : b) v = rng.uniform(-1, 1);
    const auto f = lu_factor(m);
    ASSERT_FALSE(f.singular);
    const Vector x = lu_solve(f, b);
    Vector r = matvec(m, x);
    for (std::size_t i = 0; i < n; ++i) r[i] -= b[i];
    EXPECT_LE(norm_inf(r), 1e-10 * (norm_inf(m) * norm_inf(x) + norm_inf(b)));
  }
}

TEST(LuSolve, TransposeSolve) {
  Rng rng(8);
  const Matrix m = well_conditioned(4, rng);
  const Vector b{1, -2, 0.5, 3};
  const Vector x = lu_solve_transpose(lu_factor(m), b);
  const Vector r = matvec_transpose(m, x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r[i], b[i], 1e-12);
}

TEST(LuSolve, Deterministic) {
  Rng rng(9);
  const Matrix m = well_conditioned(12, rng);
  Vector b(12, 1.0);
  EXPECT_EQ(lu_solve(lu_factor(m), b), lu_solve(lu_factor(m), b));
}

TEST(KronApply, OneBlockIsMatvec) {
  Matrix x{{1, 2, 3}, {4, 5, 6}};
  const Vector h{1, -1, 2};
  EXPECT_EQ(kron_apply(x, h, 1), matvec(x, h));
}

TEST(KronApply, IdentityLeavesVectorUnchanged) {
  const Vector h{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(kron_apply(Matrix::identity(2), h, 3), h);
}

TEST(KronApply, LengthMismatchThrows) {
  EXPECT_THROW(kron_apply(Matrix(2, 3), Vector(5), 2), DimensionError);
}

TEST(KronApply, MatchesMaterializedKronecker) {
  Rng rng(21);
  for (std::size_t r = 1; r <= 6; ++r) {
    for (std::size_t c = 1; c <= 6; ++c) {
      const std::size_t blocks = 1 + (r + c) % 3;
      const Matrix x = random_matrix(r, c, rng);
      Vector h(blocks * c);
      for (double& v : h) v = rng.uniform(-1, 1);
      Matrix big(blocks * r, blocks * c);
      for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) big(b * r + i, b * c + j) = x(i, j);
      // The zero blocks contribute exact zeros, so the sums agree bit for bit.
      EXPECT_EQ(kron_apply(x, h, blocks), matvec(big, h));
      const Vector g(blocks * r, 1.0);
      EXPECT_EQ(kron_apply_transpose(x, g, blocks), matvec_transpose(big, g));
    }
  }
}

}  // namespace
}  // namespace sann
