#include "sann/bench_linear.hpp"

#include <chrono>
#include <cmath>

#include "sann/taped.hpp"

namespace sann {

LinearSolveSample gen_dd_system(std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gen_dd_system: n must be >= 1");
  LinearSolveSample s;
  s.x_mat = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = rng.uniform(-1.0, 1.0);
      s.x_mat(i, j) = v;
      row_sum += std::abs(v);
    }
    s.x_mat(i, i) = row_sum + rng.uniform(0.1, 1.0);
  }
  s.g.resize(n);
  for (double& v : s.g) v = rng.uniform(-1.0, 1.0);
  s.y_star = lu_solve(lu_factor(s.x_mat), s.g);
  return s;
}

Sample to_sample(const LinearSolveSample& s) {
  Sample out;
  out.x = s.x_mat.storage();
  out.x.insert(out.x.end(), s.g.begin(), s.g.end());
  out.y = s.y_star;
  return out;
}

double linear_residual(const Sample& sample, std::span<const double> y) {
  const std::size_t n = y.size();
  if (sample.x.size() != n * n + n) throw DimensionError("linear_residual: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = -sample.x[n * n + i];
    for (std::size_t j = 0; j < n; ++j) r += sample.x[i * n + j] * y[j];
    acc += r * r;
  }
  return std::sqrt(acc);
}

void LinearConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (train_size < 1 || val_size < 1) throw std::invalid_argument("dataset sizes must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(c_max >= 0.0)) throw std::invalid_argument("c_max must be >= 0");
  if (!(lr_final_fraction > 0.0)) throw std::invalid_argument("lr_final_fraction must be > 0");
}

ExperimentData make_linear_data(const LinearConfig& cfg) {
  Rng rng(cfg.seed);
  Rng train_rng = rng.split();
  Rng val_rng = rng.split();
  ExperimentData data;
  data.train.reserve(cfg.train_size);
  for (std::size_t i = 0; i < cfg.train_size; ++i) data.train.push_back(to_sample(gen_dd_system(cfg.n, train_rng)));
  data.val.reserve(cfg.val_size);
  for (std::size_t i = 0; i < cfg.val_size; ++i) data.val.push_back(to_sample(gen_dd_system(cfg.n, val_rng)));
  return data;
}

namespace {

TrainReport to_report(std::string model, std::size_t params, const FitResult& fit_result,
                      double seconds, std::uint64_t seed) {
  TrainReport r;
  r.model = std::move(model);
  r.parameter_count = params;
  r.initial_val_metric = fit_result.initial_val_metric;
  r.final_val_metric =
      fit_result.epochs.empty() ? fit_result.initial_val_metric : fit_result.epochs.back().val_metric;
  for (const auto& e : fit_result.epochs) {
    r.train_loss.push_back(e.train_loss);
    r.val_metric.push_back(e.val_metric);
  }
  r.wall_seconds = seconds;
  r.seed = seed;
  return r;
}

}  // namespace

TrainReport train_sann_model(const IsdNetSpec& spec, const std::vector<std::size_t>& widths,
                             const SannConfig& sann_cfg, double lambda, const TrainOptions& opts,
                             const ExperimentData& data, const Metric& metric,
                             const ProgressFn& progress, MrnnParams* trained) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(opts.seed ^ 0x5A4E4EULL);
  MrnnParams params = make_mrnn(spec, widths, rng);
  MrnnParams grads = params.zeros_like();
  SannConfig cfg = sann_cfg;
  cfg.record_trajectory = false;
  const LossWeights w{lambda};

  Trainable model;
  model.params = params.tensors();
  model.grads = grads.tensors();
  model.loss_grad = [&](const Sample& s, double seed) {
    return sann_loss_and_grad(spec, params, s.x, s.y, cfg, w, &grads, seed);
  };
  // Evaluates the live parameters, so predictions track training.
  const VectorFieldProgram field(
      spec.dims(), [&](std::span<const double> x, std::span<const double> z, double s) {
        return isdnet_forward(spec, params, x, z, s);
      });
  model.predict = [&](const Sample& s) { return sann_eval(field, s.x, cfg); };
  const FitResult res = fit(model, data.train, data.val, opts, metric, [&](const EpochLog& e) {
    if (progress) progress("sann", e);
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  TrainReport r = to_report("sann", params.parameter_count(), res, secs, opts.seed);
  if (trained) *trained = std::move(params);
  return r;
}

TrainReport train_feedforward_model(const std::vector<std::size_t>& widths,
                                    const TrainOptions& opts, const ExperimentData& data,
                                    const Metric& metric, const ProgressFn& progress,
                                    FeedForward* trained) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(opts.seed ^ 0xFEEDULL);
  FeedForward net = make_feedforward(widths, rng);
  FeedForward grads = net.zeros_like();
  Trainable model;
  model.params = net.tensors();
  model.grads = grads.tensors();
  model.loss_grad = [&](const Sample& s, double seed) {
    return feedforward_loss_and_grad(net, s.x, s.y, &grads, seed);
  };
  model.predict = [&](const Sample& s) { return feedforward_forward(net, s.x); };
  const FitResult res = fit(model, data.train, data.val, opts, metric, [&](const EpochLog& e) {
    if (progress) progress("baseline", e);
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  TrainReport r = to_report("baseline", net.parameter_count(), res, secs, opts.seed);
  if (trained) *trained = std::move(net);
  return r;
}

LinearReport train_linear(const LinearConfig& cfg, const ProgressFn& progress,
                          MrnnParams* trained_sann) {
  cfg.validate();
  const ExperimentData data = make_linear_data(cfg);
  TrainOptions opts;
  opts.epochs = cfg.epochs;
  opts.batch_size = cfg.batch_size;
  opts.adam.lr = cfg.lr;
  opts.lr_final_fraction = cfg.lr_final_fraction;
  opts.seed = cfg.seed;

  SannConfig sc;
  sc.steps = cfg.steps;
  sc.c_max = cfg.c_max;
  sc.scheme = cfg.scheme;

  const IsdNetSpec spec = IsdNetSpec::linear_solve(cfg.n);
  LinearReport report;
  report.sann = train_sann_model(spec, cfg.widths, sc, cfg.lambda, opts, data, linear_residual,
                                 progress, trained_sann);
  std::vector<std::size_t> ff{cfg.n * cfg.n + cfg.n};
  ff.insert(ff.end(), cfg.ff_widths.begin(), cfg.ff_widths.end());
  ff.push_back(cfg.n);
  report.baseline = train_feedforward_model(ff, opts, data, linear_residual, progress);
  return report;
}

}  // namespace sann
