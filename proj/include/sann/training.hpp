#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sann/autodiff.hpp"
#include "sann/linalg.hpp"

namespace sann {

struct Sample {
  Vector x;
  Vector y;
};

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  AdamConfig adam;
  // The learning rate decays geometrically to lr * lr_final_fraction over the run.
  double lr_final_fraction = 1.0;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-sample loss over the epoch
  double val_metric = 0.0;
  double seconds = 0.0;
};

struct FitResult {
  double initial_val_metric = 0.0;
  std::vector<EpochLog> epochs;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(std::size_t epoch, std::size_t batch, const std::string& what);
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

// One model under training. loss_grad adds seed * gradient into the gradient
// arrays and returns the sample loss.
struct Trainable {
  std::vector<std::span<double>> params;
  std::vector<std::span<double>> grads;
  std::function<double(const Sample&, double seed)> loss_grad;
  std::function<Vector(const Sample&)> predict;
};

using Metric = std::function<double(const Sample&, std::span<const double> prediction)>;

double mean_metric(const std::function<Vector(const Sample&)>& predict,
                   const std::vector<Sample>& data, const Metric& metric);

// Mini-batch Adam on the mean batch loss, in a fixed order for a fixed seed.
FitResult fit(Trainable& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
              const TrainOptions& opts, const Metric& metric,
              const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace sann
