#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sann/feedforward.hpp"
#include "sann/isd_net.hpp"
#include "sann/linalg.hpp"
#include "sann/random.hpp"
#include "sann/sann_core.hpp"
#include "sann/training.hpp"

namespace sann {

struct LinearSolveSample {
  Matrix x_mat;
  Vector g;
  Vector y_star;
};

// Off-diagonals U[-1, 1]; X_ii = sum_{j != i} |X_ij| + U[0.1, 1]; g U[-1, 1].
LinearSolveSample gen_dd_system(std::size_t n, Rng& rng);

// x = vec(X) ++ g, y = y*.
Sample to_sample(const LinearSolveSample& s);

// ||X y - g||_2 with (X, g) decoded from sample.x.
double linear_residual(const Sample& sample, std::span<const double> y);

struct TrainReport {
  std::string model;
  std::size_t parameter_count = 0;
  double initial_val_metric = 0.0;
  double final_val_metric = 0.0;
  std::vector<double> train_loss;
  std::vector<double> val_metric;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct LinearConfig {
  std::size_t n = 10;
  std::size_t train_size = 10000;
  std::size_t val_size = 1000;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  double lr = 1e-3;
  double lr_final_fraction = 0.1;
  double lambda = 1e-2;
  std::size_t steps = 10;
  double c_max = 10.0;
  Scheme scheme = Scheme::kEuler;
  // 13 blocks of the 13-column packing; fewer cannot represent x -> X^-1 g.
  std::vector<std::size_t> widths = {169};        // MRNN hidden widths
  std::vector<std::size_t> ff_widths = {2530};    // baseline hidden widths

  void validate() const;
};

struct LinearReport {
  TrainReport sann;
  TrainReport baseline;
};

struct ExperimentData {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

ExperimentData make_linear_data(const LinearConfig& cfg);

using ProgressFn = std::function<void(const std::string& model, const EpochLog&)>;

LinearReport train_linear(const LinearConfig& cfg, const ProgressFn& progress = {},
                          MrnnParams* trained_sann = nullptr);

// Shared by the linear and EIT experiments.
TrainReport train_sann_model(const IsdNetSpec& spec, const std::vector<std::size_t>& widths,
                             const SannConfig& sann_cfg, double lambda, const TrainOptions& opts,
                             const ExperimentData& data, const Metric& metric,
                             const ProgressFn& progress, MrnnParams* trained = nullptr);
TrainReport train_feedforward_model(const std::vector<std::size_t>& widths,
                                    const TrainOptions& opts, const ExperimentData& data,
                                    const Metric& metric, const ProgressFn& progress,
                                    FeedForward* trained = nullptr);

}  // namespace sann
