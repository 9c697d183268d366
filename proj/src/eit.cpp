#include "sann/eit.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "sann/isd_net.hpp"

namespace sann {

RectangularNetwork build_rectangular(std::size_t n) {
  if (n < 1) throw std::invalid_argument("build_rectangular: n must be >= 1");
  const std::size_t side = n + 2;
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  auto is_corner = [&](std::size_t r, std::size_t c) {
    return (r == 0 || r == side - 1) && (c == 0 || c == side - 1);
  };
  auto is_interior = [&](std::size_t r, std::size_t c) {
    return r >= 1 && r <= n && c >= 1 && c <= n;
  };

  RectangularNetwork net;
  net.n = n;
  std::vector<std::size_t> id(side * side, none);
  std::size_t next = 0;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c)
      if (!is_corner(r, c) && !is_interior(r, c)) id[r * side + c] = next++;
  net.boundary_count = next;
  for (std::size_t r = 1; r <= n; ++r)
    for (std::size_t c = 1; c <= n; ++c) id[r * side + c] = next++;
  net.interior_count = next - net.boundary_count;

  // An edge needs at least one interior end; boundary nodes are never linked
  // to each other.
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t a = id[r * side + c];
      if (a == none) continue;
      if (c + 1 < side && id[r * side + c + 1] != none &&
          (is_interior(r, c) || is_interior(r, c + 1)))
        net.edges.emplace_back(a, id[r * side + c + 1]);
      if (r + 1 < side && id[(r + 1) * side + c] != none &&
          (is_interior(r, c) || is_interior(r + 1, c)))
        net.edges.emplace_back(a, id[(r + 1) * side + c]);
    }
  }
  return net;
}

Matrix kirchhoff(std::size_t nodes, std::span<const std::pair<std::size_t, std::size_t>> edges,
                 std::span<const double> gamma) {
  if (gamma.size() != edges.size()) {
    throw DimensionError("kirchhoff: " + std::to_string(gamma.size()) + " conductances for " +
                         std::to_string(edges.size()) + " edges");
  }
  Matrix k(nodes, nodes);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    if (i >= nodes || j >= nodes || i == j) throw std::invalid_argument("kirchhoff: bad edge");
    const double g = gamma[e];
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("kirchhoff: conductance of edge " + std::to_string(e) +
                                  " is not positive");
    }
    k(i, j) += g;
    k(j, i) += g;
    k(i, i) -= g;
    k(j, j) -= g;
  }
  return k;
}

Matrix kirchhoff(const RectangularNetwork& net, std::span<const double> gamma) {
  return kirchhoff(net.node_count(), net.edges, gamma);
}

namespace {

// Rows of P = [I; -D^-1 B^T], so that Lambda = P^T K P.
Matrix harmonic_extension(const Matrix& k, std::size_t nb) {
  const std::size_t nv = k.rows();
  const std::size_t ni = nv - nb;
  Matrix p(nv, nb);
  for (std::size_t i = 0; i < nb; ++i) p(i, i) = 1.0;
  if (ni == 0) return p;
  Matrix d(ni, ni);
  for (std::size_t i = 0; i < ni; ++i)
    for (std::size_t j = 0; j < ni; ++j) d(i, j) = k(nb + i, nb + j);
  const LuFactorization f = lu_factor(d);
  if (f.singular) throw ContractViolation("response: interior block is singular");
  Vector col(ni);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < ni; ++i) col[i] = -k(nb + i, b);
    const Vector u = lu_solve(f, col);
    for (std::size_t i = 0; i < ni; ++i) p(nb + i, b) = u[i];
  }
  return p;
}

}  // namespace

Matrix response(const Matrix& k, std::size_t nb) {
  if (!k.square() || nb > k.rows()) throw DimensionError("response: bad block partition");
  const std::size_t ni = k.rows() - nb;
  Matrix lam(nb, nb);
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) lam(i, j) = k(i, j);
  if (ni == 0) return lam;
  const Matrix p = harmonic_extension(k, nb);
  // B D^-1 B^T = -B * P_I.
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      double acc = 0.0;
      for (std::size_t q = 0; q < ni; ++q) acc += k(i, nb + q) * p(nb + q, j);
      lam(i, j) += acc;
    }
  // Exact symmetry; the two triangles differ only by rounding.
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = i + 1; j < nb; ++j) {
      const double v = 0.5 * (lam(i, j) + lam(j, i));
      lam(i, j) = v;
      lam(j, i) = v;
    }
  return lam;
}

std::vector<Vector> response_jacobian(const RectangularNetwork& net,
                                      std::span<const double> gamma) {
  const std::size_t nb = net.boundary_count;
  const Matrix p = harmonic_extension(kirchhoff(net, gamma), nb);
  // dK/dgamma_e = -(e_i - e_j)(e_i - e_j)^T and dLambda = P^T dK P.
  std::vector<Vector> jac;
  jac.reserve(net.edge_count());
  Vector w(nb);
  for (const auto& [i, j] : net.edges) {
    for (std::size_t b = 0; b < nb; ++b) w[b] = p(i, b) - p(j, b);
    Vector d(nb * nb);
    for (std::size_t a = 0; a < nb; ++a)
      for (std::size_t b = 0; b < nb; ++b) d[a * nb + b] = -w[a] * w[b];
    jac.push_back(std::move(d));
  }
  return jac;
}

Matrix add_response_noise(const Matrix& lambda, double noise_level, Rng& rng) {
  if (!(noise_level >= 0.0)) throw std::invalid_argument("noise_level must be >= 0");
  if (noise_level == 0.0) return lambda;
  Matrix noisy = lambda;
  for (double& v : noisy.data()) v += noise_level * std::abs(v) * rng.normal();
  for (std::size_t i = 0; i < noisy.rows(); ++i)
    for (std::size_t j = i + 1; j < noisy.cols(); ++j) {
      const double v = 0.5 * (noisy(i, j) + noisy(j, i));
      noisy(i, j) = v;
      noisy(j, i) = v;
    }
  return noisy;
}

std::vector<EitSample> gen_eit_dataset(const RectangularNetwork& net, std::size_t count,
                                       double noise_level, Rng& rng) {
  if (!(noise_level >= 0.0)) throw std::invalid_argument("noise_level must be >= 0");
  std::vector<EitSample> out;
  out.reserve(count);
  const double lo = std::log(0.5);
  const double hi = std::log(2.0);
  for (std::size_t s = 0; s < count; ++s) {
    Rng sample_rng = rng.split();
    EitSample e;
    e.gamma.resize(net.edge_count());
    for (double& g : e.gamma) g = std::exp(sample_rng.uniform(lo, hi));
    e.lambda = response(kirchhoff(net, e.gamma), net.boundary_count);
    e.lambda = add_response_noise(e.lambda, noise_level, sample_rng);
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

Vector response_residual(const RectangularNetwork& net, std::span<const double> gamma,
                         const Matrix& target) {
  const Matrix lam = response(kirchhoff(net, gamma), net.boundary_count);
  Vector r(lam.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = lam.data()[i] - target.data()[i];
  return r;
}

}  // namespace

GaussNewtonResult gauss_newton_invert(const Matrix& target, const RectangularNetwork& net,
                                      std::span<const double> gamma_init,
                                      const GaussNewtonConfig& cfg) {
  const std::size_t nb = net.boundary_count;
  const std::size_t ne = net.edge_count();
  if (target.rows() != nb || target.cols() != nb) throw DimensionError("gauss_newton: target shape");
  if (gamma_init.size() != ne) throw DimensionError("gauss_newton: gamma_init length");
  for (double g : gamma_init)
    if (!(g > 0.0)) throw std::invalid_argument("gauss_newton: gamma_init must be positive");

  GaussNewtonResult res;
  Vector gamma(gamma_init.begin(), gamma_init.end());
  Vector r = response_residual(net, gamma, target);
  double rn = norm2(r);
  res.gamma = gamma;
  res.residual_norm = rn;

  for (std::size_t it = 0; it < cfg.max_iterations && rn > cfg.tolerance; ++it) {
    const std::vector<Vector> jac = response_jacobian(net, gamma);
    Matrix jtj(ne, ne);
    Vector rhs(ne);
    for (std::size_t a = 0; a < ne; ++a) {
      rhs[a] = -dot(jac[a], r);
      for (std::size_t b = a; b < ne; ++b) {
        jtj(a, b) = dot(jac[a], jac[b]);
        jtj(b, a) = jtj(a, b);
      }
    }
    const LuFactorization f = lu_factor(jtj);
    if (f.singular) break;
    const Vector delta = lu_solve(f, rhs);

    double step = 1.0;
    bool accepted = false;
    Vector trial(ne);
    for (std::size_t h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
      bool positive = true;
      for (std::size_t e = 0; e < ne; ++e) {
        trial[e] = gamma[e] + step * delta[e];
        positive = positive && trial[e] > 0.0;
      }
      if (!positive) continue;
      Vector tr = response_residual(net, trial, target);
      const double tn = norm2(tr);
      if (tn < rn) {
        gamma = trial;
        r = std::move(tr);
        rn = tn;
        accepted = true;
        break;
      }
    }
    res.iterations = it + 1;
    if (!accepted) break;
    res.gamma = gamma;
    res.residual_norm = rn;
  }
  res.converged = res.residual_norm <= cfg.tolerance;
  return res;
}

double relative_error(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw DimensionError("relative_error: length mismatch");
  double num = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = estimate[i] - truth[i];
    num += d * d;
  }
  return std::sqrt(num) / norm2(truth);
}

void write_eit_csv(std::ostream& os, const RectangularNetwork& net,
                   const std::vector<EitSample>& samples) {
  os << "# rectangular network n=" << net.n << ": " << net.interior_count << " interior, "
     << net.boundary_count << " boundary, " << net.edge_count()
     << " edges (interior grid plus one boundary ray per row/column end)\n";
  const std::size_t nb = net.boundary_count;
  bool first = true;
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      os << (first ? "" : ",") << "lambda_" << i << "_" << j;
      first = false;
    }
  for (std::size_t e = 0; e < net.edge_count(); ++e) os << ",gamma_" << e;
  os << "\n";
  char buf[32];
  for (const auto& s : samples) {
    first = true;
    for (double v : s.lambda.data()) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << (first ? "" : ",") << buf;
      first = false;
    }
    for (double v : s.gamma) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << "," << buf;
    }
    os << "\n";
  }
}

void EitConfig::validate() const {
  if (grid_n < 1) throw std::invalid_argument("grid_n must be >= 1");
  if (train_size < 1 || val_size < 1) throw std::invalid_argument("dataset sizes must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(c_max >= 0.0)) throw std::invalid_argument("c_max must be >= 0");
  if (!(noise_level >= 0.0)) throw std::invalid_argument("noise_level must be >= 0");
  if (!(lr_final_fraction > 0.0)) throw std::invalid_argument("lr_final_fraction must be > 0");
}

Sample to_sample(const EitSample& s) { return {s.lambda.storage(), s.gamma}; }

namespace {

double gamma_relative_error(const Sample& s, std::span<const double> pred) {
  return relative_error(pred, s.y);
}

}  // namespace

EitData make_eit_data(const EitConfig& cfg) {
  cfg.validate();
  EitData d;
  d.net = build_rectangular(cfg.grid_n);
  Rng rng(cfg.seed);
  Rng train_rng = rng.split();
  Rng val_rng = rng.split();
  Rng noise_rng = rng.split();
  d.train = gen_eit_dataset(d.net, cfg.train_size, 0.0, train_rng);
  d.val = gen_eit_dataset(d.net, cfg.val_size, 0.0, val_rng);
  for (const auto& s : d.val)
    d.val_noisy.push_back({add_response_noise(s.lambda, cfg.noise_level, noise_rng), s.gamma});
  return d;
}

EitReport train_eit(const EitConfig& cfg, const ProgressFn& progress, MrnnParams* trained_sann) {
  const EitData eit = make_eit_data(cfg);
  const RectangularNetwork& net = eit.net;
  ExperimentData data;
  for (const auto& s : eit.train) data.train.push_back(to_sample(s));
  for (const auto& s : eit.val) data.val.push_back(to_sample(s));
  std::vector<Sample> noisy;
  for (const auto& s : eit.val_noisy) noisy.push_back(to_sample(s));

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

  const std::size_t nb = net.boundary_count;
  const IsdNetSpec spec = IsdNetSpec::matrix_input(nb, nb, net.edge_count());
  EitReport report;
  MrnnParams trained;
  report.sann = train_sann_model(spec, cfg.widths, sc, cfg.lambda, opts, data,
                                 gamma_relative_error, progress, &trained);
  const VectorFieldProgram field = mrnn_field(spec, trained);
  if (trained_sann) *trained_sann = std::move(trained);
  report.sann_noisy = mean_metric([&](const Sample& s) { return sann_eval(field, s.x, sc); },
                                  noisy, gamma_relative_error);

  std::vector<std::size_t> ff{nb * nb};
  ff.insert(ff.end(), cfg.ff_widths.begin(), cfg.ff_widths.end());
  ff.push_back(net.edge_count());
  FeedForward ff_net;
  report.baseline =
      train_feedforward_model(ff, opts, data, gamma_relative_error, progress, &ff_net);
  report.baseline_noisy = mean_metric(
      [&](const Sample& s) { return feedforward_forward(ff_net, s.x); }, noisy,
      gamma_relative_error);

  const std::size_t trials = std::min(cfg.oracle_trials, eit.val.size());
  const Vector ones(net.edge_count(), 1.0);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const EitSample& v = eit.val[i];
    const double clean = relative_error(gauss_newton_invert(v.lambda, net, ones).gamma, v.gamma);
    const double dirty =
        relative_error(gauss_newton_invert(eit.val_noisy[i].lambda, net, ones).gamma, v.gamma);
    report.oracle_noiseless += clean;
    report.oracle_noisy += dirty;
    if (clean <= 1e-6) ++ok;
  }
  if (trials > 0) {
    report.oracle_noiseless /= static_cast<double>(trials);
    report.oracle_noisy /= static_cast<double>(trials);
    report.oracle_success_rate = static_cast<double>(ok) / static_cast<double>(trials);
  }
  return report;
}

}  // namespace sann
