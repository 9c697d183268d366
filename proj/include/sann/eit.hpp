#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sann/bench_linear.hpp"
#include "sann/isd_net.hpp"
#include "sann/linalg.hpp"
#include "sann/random.hpp"
#include "sann/sann_core.hpp"

namespace sann {

// n x n interior grid; every interior row and column is extended by one
// boundary node at each end (no corner nodes). Nodes are numbered boundary
// first, each group in scanline order over the (n+2) x (n+2) layout.
struct RectangularNetwork {
  std::size_t n = 0;
  std::size_t boundary_count = 0;
  std::size_t interior_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t node_count() const { return boundary_count + interior_count; }
  std::size_t edge_count() const { return edges.size(); }
};

RectangularNetwork build_rectangular(std::size_t n);

// Arbitrary graph on `nodes` vertices; used for the small hand-checked cases.
Matrix kirchhoff(std::size_t nodes, std::span<const std::pair<std::size_t, std::size_t>> edges,
                 std::span<const double> gamma);
Matrix kirchhoff(const RectangularNetwork& net, std::span<const double> gamma);

// A - B D^-1 B^T for K = [[A, B], [B^T, D]] with the first nb nodes on the
// boundary. Throws ContractViolation when D is singular.
Matrix response(const Matrix& k, std::size_t nb);

// d Lambda / d gamma_e for every edge, each stored as a flattened nb x nb matrix.
std::vector<Vector> response_jacobian(const RectangularNetwork& net, std::span<const double> gamma);

struct EitSample {
  Matrix lambda;
  Vector gamma;
};

// gamma log-uniform on [0.5, 2] per edge. With noise_level > 0 every entry of
// Lambda gets N(0, (noise_level * |Lambda_ij|)^2) noise and the result is
// re-symmetrized.
std::vector<EitSample> gen_eit_dataset(const RectangularNetwork& net, std::size_t count,
                                       double noise_level, Rng& rng);

// Noise applied to an already computed response; same model as above.
Matrix add_response_noise(const Matrix& lambda, double noise_level, Rng& rng);

struct GaussNewtonConfig {
  std::size_t max_iterations = 100;
  double tolerance = 1e-10;  // on ||vec(Lambda(gamma) - target)||_2
  std::size_t max_halvings = 40;
};

struct GaussNewtonResult {
  Vector gamma;  // best iterate seen
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

GaussNewtonResult gauss_newton_invert(const Matrix& target, const RectangularNetwork& net,
                                      std::span<const double> gamma_init,
                                      const GaussNewtonConfig& cfg = {});

double relative_error(std::span<const double> estimate, std::span<const double> truth);

// One row per sample: the flattened response, then the conductances.
void write_eit_csv(std::ostream& os, const RectangularNetwork& net,
                   const std::vector<EitSample>& samples);

struct EitConfig {
  std::size_t grid_n = 2;
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
  double noise_level = 0.01;
  // Two layers: with h_0 = 0 a single layer is only piecewise linear in Lambda.
  std::vector<std::size_t> widths = {10, 20};
  std::vector<std::size_t> ff_widths = {230};
  std::size_t oracle_trials = 100;

  void validate() const;
};

struct EitReport {
  TrainReport sann;      // val metric on noiseless data
  TrainReport baseline;
  double sann_noisy = 0.0;
  double baseline_noisy = 0.0;
  double oracle_noiseless = 0.0;  // mean relative error of Gauss-Newton
  double oracle_noisy = 0.0;
  double oracle_success_rate = 0.0;  // fraction of noiseless trials at rel <= 1e-6
};

Sample to_sample(const EitSample& s);

// Noiseless training and validation sets, plus the validation set with noise.
struct EitData {
  RectangularNetwork net;
  std::vector<EitSample> train;
  std::vector<EitSample> val;
  std::vector<EitSample> val_noisy;
};

EitData make_eit_data(const EitConfig& cfg);

EitReport train_eit(const EitConfig& cfg, const ProgressFn& progress = {},
                    MrnnParams* trained_sann = nullptr);

}  // namespace sann
