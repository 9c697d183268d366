#include <gtest/gtest.h>

#include <cmath>

#include "sann/random.hpp"
#include "sann/sa_transformer.hpp"

namespace sann {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.uniform(-1, 1);
  return m;
}

TEST(Saxp, Values) {
  EXPECT_EQ(saxp(0.0), 1.0);
  EXPECT_EQ(saxp(1.0), 3.0);
  EXPECT_EQ(saxp(-1.0), 1.0 / 3.0);
}

TEST(Saxp, OneSidedDerivativesAtZero) {
  const double h = 1e-8;
  EXPECT_NEAR((saxp(h) - saxp(0)) / h, 1.0, 1e-6);
  EXPECT_NEAR((saxp(0) - saxp(-h)) / h, 1.0, 1e-6);
}

TEST(Saxp, PositiveAndMonotoneOnSweep) {
  double prev = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double x = -100.0 + i * 1e-3;
    const double v = saxp(x);
    EXPECT_GT(v, 0.0);
    if (i > 0) {
      EXPECT_GT(v, prev) << x;
    }
    prev = v;
  }
}

TEST(SArgMax, ConstantRowIsUniform) {
  const Matrix s = sargmax(Matrix(3, 4, 2.5));
  for (double v : s.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(SArgMax, DominantEntry) {
  const Matrix s = sargmax(Matrix{{10, 0, 0}});
  EXPECT_GT(s(0, 0), 0.97);
  EXPECT_DOUBLE_EQ(s(0, 0), 111.0 / 113.0);
}

TEST(SArgMax, RowsAreDistributions) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + t % 8;
    const Matrix s = sargmax(random_matrix(n, n, rng, 5.0));
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (double v : s.row(i)) {
        EXPECT_GT(v, 0.0);
        if (n > 1) {
          EXPECT_LT(v, 1.0);
        }
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

AttentionHeadParams random_head(std::size_t k, std::size_t d_in, std::size_t d_head, Rng& rng) {
  return {random_matrix(k, d_in, rng), random_matrix(k, d_in, rng), random_matrix(d_head, d_in, rng)};
}

TEST(Attention, SingleTokenIsValueProjection) {
  Rng rng(2);
  const auto h = random_head(3, 4, 2, rng);
  const Matrix x = random_matrix(4, 1, rng);
  EXPECT_EQ(attention(h, x), matmul(h.value, x));
}

TEST(Attention, ZeroValueGivesZero) {
  Rng rng(3);
  auto h = random_head(3, 4, 2, rng);
  h.value = Matrix(2, 4);
  EXPECT_EQ(attention(h, random_matrix(4, 3, rng)), Matrix(2, 3));
}

TEST(Attention, MatchesStepByStepComposition) {
  Rng rng(4);
  const std::size_t k = 3, d = 4, tokens = 3;
  const auto h = random_head(k, d, 2, rng);
  const Matrix x = random_matrix(d, tokens, rng);
  // scores_ij = (Q x_i) . (K x_j) / sqrt(k), normalized per row with saxp.
  Matrix scores(tokens, tokens);
  for (std::size_t i = 0; i < tokens; ++i)
    for (std::size_t j = 0; j < tokens; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        double qi = 0.0, kj = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          qi += h.query(r, c) * x(c, i);
          kj += h.key(r, c) * x(c, j);
        }
        acc += qi * kj;
      }
      scores(i, j) = acc / std::sqrt(static_cast<double>(k));
    }
  Matrix w(tokens, tokens);
  for (std::size_t i = 0; i < tokens; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < tokens; ++j) z += saxp(scores(i, j));
    for (std::size_t j = 0; j < tokens; ++j) w(i, j) = saxp(scores(i, j)) / z;
  }
  const Matrix want = matmul(matmul(h.value, x), w);
  const Matrix got = attention(h, x);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
}

TEST(Attention, ShapeMismatchThrows) {
  Rng rng(5);
  const auto h = random_head(3, 4, 2, rng);
  EXPECT_THROW(attention(h, Matrix(5, 2)), DimensionError);
}

TEST(Matt, ZeroMixingIsSkipOnly) {
  Rng rng(6);
  TransformerBlockParams p;
  p.heads.push_back({Matrix(4, 2), random_head(3, 4, 2, rng)});
  const Matrix x = random_matrix(4, 3, rng);
  EXPECT_EQ(matt(p, x), x);
}

TEST(Matt, HeadsAddLinearly) {
  Rng rng(7);
  const Matrix x = random_matrix(4, 5, rng);
  const AttentionHead h1{random_matrix(4, 2, rng), random_head(3, 4, 2, rng)};
  const AttentionHead h2{random_matrix(4, 3, rng), random_head(2, 4, 3, rng)};
  TransformerBlockParams both, one, two;
  both.heads = {h1, h2};
  one.heads = {h1};
  two.heads = {h2};
  const Matrix a = matt(both, x), b = matt(one, x), c = matt(two, x);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_NEAR(a.data()[i], b.data()[i] + c.data()[i] - x.data()[i], 1e-12);
  const Matrix single = matmul(h1.w, attention(h1.theta, x));
  for (std::size_t i = 0; i < b.size(); ++i)
    EXPECT_NEAR(b.data()[i], x.data()[i] + single.data()[i], 1e-15);
}

TEST(Mlp, Cases) {
  Rng rng(8);
  Matrix x = random_matrix(3, 4, rng);
  for (double& v : x.data()) v = std::abs(v);
  EXPECT_EQ(mlp(Matrix::identity(3), Vector(3, 0.0), x), x);
  EXPECT_EQ(mlp(Matrix::identity(3), Vector(3, -5.0), x), Matrix(3, 4));
  const Matrix w = random_matrix(3, 3, rng);
  const Vector b{0.1, -0.2, 0.3};
  const Matrix y = random_matrix(3, 4, rng);
  const Matrix got = mlp(w, b, y);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 3; ++k) acc += w(i, k) * y(k, j);
      EXPECT_NEAR(got(i, j), std::max(acc + b[i], 0.0), 1e-15);
    }
}

TEST(LayerNorm, Cases) {
  EXPECT_EQ(layer_norm(Matrix(2, 3, 4.0), 1e-6), Matrix(2, 3));
  const Matrix r = layer_norm(Matrix{{1, -1}}, 1e-6);
  EXPECT_DOUBLE_EQ(r(0, 0), 1 / std::sqrt(1 + 1e-6));
  EXPECT_DOUBLE_EQ(r(0, 1), -1 / std::sqrt(1 + 1e-6));
  Rng rng(9);
  const Matrix x = random_matrix(5, 64, rng, 10.0);
  const Matrix y = layer_norm(x, 1e-6);
  for (std::size_t i = 0; i < 5; ++i) {
    double mean = 0.0, var = 0.0;
    for (double v : y.row(i)) mean += v;
    mean /= 64;
    for (double v : y.row(i)) var += (v - mean) * (v - mean);
    var /= 64;
    EXPECT_LE(std::abs(mean), 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

TEST(Block, FiniteOnRandomDraws) {
  Rng rng(10);
  const TransformerDims dims;
  for (int t = 0; t < 1000; ++t) {
    const auto p = random_block(dims, rng);
    const Matrix x = random_matrix(dims.d_in, 1 + t % 12, rng, 10.0);
    for (double v : transformer_block(p, x).data()) ASSERT_TRUE(std::isfinite(v));
  }
}

}  // namespace
}  // namespace sann
