#include "sann/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "sann/random.hpp"
#include "sann/sann_core.hpp"

namespace sann {

TrainingDivergedError::TrainingDivergedError(std::size_t epoch, std::size_t batch,
                                             const std::string& what)
    : std::runtime_error("training diverged in epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch) + ": " + what),
      epoch_(epoch),
      batch_(batch) {}

double mean_metric(const std::function<Vector(const Sample&)>& predict,
                   const std::vector<Sample>& data, const Metric& metric) {
  if (data.empty()) return 0.0;
  double acc = 0.0;
  for (const Sample& s : data) acc += metric(s, predict(s));
  return acc / static_cast<double>(data.size());
}

FitResult fit(Trainable& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
              const TrainOptions& opts, const Metric& metric,
              const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.empty()) throw std::invalid_argument("fit: empty training set");
  if (opts.batch_size == 0) throw std::invalid_argument("fit: batch_size must be >= 1");
  if (model.params.size() != model.grads.size()) {
    throw DimensionError("fit: parameter and gradient lists differ");
  }
  std::vector<std::size_t> sizes;
  for (const auto& p : model.params) sizes.push_back(p.size());
  Adam adam(opts.adam, sizes);
  std::vector<std::span<const double>> grads_view(model.grads.begin(), model.grads.end());

  FitResult result;
  result.initial_val_metric = mean_metric(model.predict, val, metric);

  Rng rng(opts.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next() % i]);
    }
    AdamConfig cfg = opts.adam;
    if (opts.epochs > 1 && opts.lr_final_fraction != 1.0) {
      const double frac = static_cast<double>(epoch - 1) / static_cast<double>(opts.epochs - 1);
      cfg.lr = opts.adam.lr * std::pow(opts.lr_final_fraction, frac);
    }
    adam.set_lr(cfg.lr);

    double loss_sum = 0.0;
    std::size_t batch = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      const double seed = 1.0 / static_cast<double>(end - start);
      for (auto g : model.grads) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        double loss = 0.0;
        try {
          loss = model.loss_grad(train[order[i]], seed);
        } catch (const NonFiniteStateError& e) {
          throw TrainingDivergedError(epoch, batch, e.what());
        }
        if (!std::isfinite(loss)) throw TrainingDivergedError(epoch, batch, "non-finite loss");
        loss_sum += loss;
      }
      for (const auto& g : model.grads) {
        if (!all_finite(g)) throw TrainingDivergedError(epoch, batch, "non-finite gradient");
      }
      adam.step(model.params, grads_view);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train.size());
    log.val_metric = mean_metric(model.predict, val, metric);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace sann
