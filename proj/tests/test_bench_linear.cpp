#include <gtest/gtest.h>

#include <cmath>

#include "sann/bench_linear.hpp"
#include "sann/feedforward.hpp"
#include "sann/training.hpp"

namespace sann {
namespace {

TEST(GenDdSystem, StrictlyDiagonallyDominantAndSolved) {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const auto s = gen_dd_system(10, rng);
    for (std::size_t i = 0; i < 10; ++i) {
      double off = 0.0;
      for (std::size_t j = 0; j < 10; ++j)
        if (j != i) off += std::abs(s.x_mat(i, j));
      EXPECT_GT(std::abs(s.x_mat(i, i)), off);
      EXPECT_GT(s.x_mat(i, i), 0.0);
    }
    Vector r = matvec(s.x_mat, s.y_star);
    for (std::size_t i = 0; i < 10; ++i) r[i] -= s.g[i];
    EXPECT_LE(norm_inf(r), 1e-10);
  }
}

TEST(GenDdSystem, JacobiResidualDecreases) {
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto s = gen_dd_system(10, rng);
    const Sample smp = to_sample(s);
    Vector y(10, 0.0);
    double prev = linear_residual(smp, y);
    for (int it = 0; it < 100; ++it) {
      Vector next(10);
      for (std::size_t i = 0; i < 10; ++i) {
        double acc = s.g[i];
        for (std::size_t j = 0; j < 10; ++j)
          if (j != i) acc -= s.x_mat(i, j) * y[j];
        next[i] = acc / s.x_mat(i, i);
      }
      y = next;
      const double r = linear_residual(smp, y);
      if (prev > 1e-13) {
        EXPECT_LE(r, prev * (1 + 1e-12)) << it;
      }
      prev = r;
    }
    EXPECT_LE(prev, 1e-8);
  }
}

TEST(GenDdSystem, SeedDeterminism) {
  LinearConfig cfg;
  cfg.n = 4;
  cfg.train_size = 20;
  cfg.val_size = 5;
  const auto a = make_linear_data(cfg), b = make_linear_data(cfg);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].x, b.train[i].x);
    EXPECT_EQ(a.train[i].y, b.train[i].y);
  }
}

TEST(FeedForward, ZeroWeightsZeroOutput) {
  const std::vector<std::size_t> widths{6, 5, 3};
  const auto net = make_feedforward_zero(widths);
  EXPECT_EQ(feedforward_forward(net, Vector(6, 1.0)), Vector(3, 0.0));
}

TEST(FeedForward, ParameterCount) {
  const std::vector<std::size_t> widths{110, 2530, 10};
  EXPECT_EQ(feedforward_parameter_count(widths), 306140u);
  const std::vector<std::size_t> small{110, 7, 10};
  EXPECT_EQ(feedforward_parameter_count(small), 111u * 7 + 8 * 10);
  EXPECT_EQ(make_feedforward_zero(small).parameter_count(), 111u * 7 + 8 * 10);
}

TEST(FeedForward, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  const std::vector<std::size_t> widths{4, 6, 2};
  auto net = make_feedforward(widths, rng);
  for (auto& b : net.b)
    for (double& v : b) v = rng.uniform(-0.5, 0.5);
  const Vector x{0.3, -0.2, 0.9, 0.1}, y{0.5, -0.5};
  FeedForward grads = net.zeros_like();
  feedforward_loss_and_grad(net, x, y, &grads);
  auto params = net.tensors();
  auto g = grads.tensors();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double orig = params[t][i], h = 1e-6;
      params[t][i] = orig + h;
      const double fp = feedforward_loss_and_grad(net, x, y, nullptr);
      params[t][i] = orig - h;
      const double fm = feedforward_loss_and_grad(net, x, y, nullptr);
      params[t][i] = orig;
      EXPECT_NEAR(g[t][i], (fp - fm) / (2 * h), 1e-6);
    }
  }
}

LinearConfig smoke_config() {
  LinearConfig cfg;
  cfg.n = 4;
  cfg.train_size = 200;
  cfg.val_size = 50;
  cfg.epochs = 5;
  cfg.widths = {14};
  cfg.ff_widths = {16};
  return cfg;
}

TEST(TrainLinear, SmokeRunHasFiniteDecreasingLoss) {
  const auto report = train_linear(smoke_config());
  for (const auto* r : {&report.sann, &report.baseline}) {
    ASSERT_EQ(r->train_loss.size(), 5u);
    for (double v : r->train_loss) EXPECT_TRUE(std::isfinite(v));
    EXPECT_LT(r->train_loss.back(), r->train_loss.front()) << r->model;
    EXPECT_LT(r->final_val_metric, r->initial_val_metric) << r->model;
  }
  const auto spec = IsdNetSpec::linear_solve(4);
  const std::vector<std::size_t> widths{14};
  EXPECT_EQ(report.sann.parameter_count, make_mrnn_zero(spec, widths).parameter_count());
  EXPECT_EQ(report.baseline.parameter_count, feedforward_parameter_count(std::vector<std::size_t>{20, 16, 4}));
}

TEST(TrainLinear, FixedSeedIsReproducible) {
  auto cfg = smoke_config();
  cfg.epochs = 2;
  const auto a = train_linear(cfg), b = train_linear(cfg);
  EXPECT_EQ(a.sann.train_loss, b.sann.train_loss);
  EXPECT_EQ(a.sann.val_metric, b.sann.val_metric);
  EXPECT_EQ(a.baseline.val_metric, b.baseline.val_metric);
}

TEST(TrainLinear, ValidatesConfig) {
  auto cfg = smoke_config();
  cfg.lr = -1;
  EXPECT_THROW(train_linear(cfg), std::invalid_argument);
  cfg = smoke_config();
  cfg.widths = {5};  // not a multiple of the 7 packed columns
  EXPECT_THROW(train_linear(cfg), DimensionError);
}

}  // namespace
}  // namespace sann
