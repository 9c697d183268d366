#include "sann/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace sann {

namespace {

enum class Op : std::uint8_t {
  kConstant,
  kParam,
  kMatmul,
  kAdd,
  kSub,
  kScale,
  kAxpy,
  kHadamard,
  kRelu,
  kClamp,
  kKron,
  kLinearSolve,
  kAffine,
  kSlice,
  kPlaceColumn,
  kSqDist,
  kSumSquares,
  kLinComb,
};

}  // namespace

struct Tape::Node {
  Op op = Op::kConstant;
  bool needs_grad = false;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Id in[5] = {kNone, kNone, kNone, kNone, kNone};
  double c0 = 0.0;
  double c1 = 0.0;
  std::size_t aux = 0;
  Vector value;
  const double* ext = nullptr;
  double* ext_grad = nullptr;
  Vector extra;                    // sq_dist target, lincomb coefficients
  std::vector<Id> extra_ids;       // lincomb inputs
  std::optional<LuFactorization> lu;
  bool singular = false;

  std::size_t size() const { return rows * cols; }
  std::span<const double> val() const {
    return ext ? std::span<const double>(ext, size()) : std::span<const double>(value);
  }
};

Tape::Tape() = default;
Tape::~Tape() = default;
Tape::Tape(Tape&&) noexcept = default;
Tape& Tape::operator=(Tape&&) noexcept = default;

Tape::Id Tape::push(Node node) {
  if (nodes_.size() >= kNone) throw TapeUsageError("tape: too many nodes");
  if (backward_done_) throw TapeUsageError("tape: cannot record after backward()");
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

const Tape::Node& Tape::node(Id id) const {
  if (id >= nodes_.size()) throw TapeUsageError("tape: unknown node id");
  return nodes_[id];
}

std::span<const double> Tape::value(Id id) const { return node(id).val(); }
std::size_t Tape::rows(Id id) const { return node(id).rows; }
std::size_t Tape::cols(Id id) const { return node(id).cols; }
std::size_t Tape::size() const { return nodes_.size(); }

double Tape::scalar(Id id) const {
  const Node& n = node(id);
  if (n.size() != 1) throw DimensionError("tape: node is not a scalar");
  return n.val()[0];
}

Tape::Id Tape::constant(Vector value, std::size_t rows, std::size_t cols) {
  if (value.size() != rows * cols) throw DimensionError("tape constant: size mismatch");
  Node n;
  n.op = Op::kConstant;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Id Tape::constant(const Matrix& m) { return constant(m.storage(), m.rows(), m.cols()); }

Tape::Id Tape::param(std::span<const double> value, std::span<double> grad, std::size_t rows,
                     std::size_t cols) {
  if (value.size() != rows * cols || grad.size() != value.size()) {
    throw DimensionError("tape param: size mismatch");
  }
  Node n;
  n.op = Op::kParam;
  n.rows = rows;
  n.cols = cols;
  n.ext = value.data();
  n.ext_grad = grad.data();
  n.needs_grad = true;
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.cols != nb.rows) throw DimensionError("tape matmul: inner dimensions differ");
  Node n;
  n.op = Op::kMatmul;
  n.rows = na.rows;
  n.cols = nb.cols;
  n.in[0] = a;
  n.in[1] = b;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.assign(n.size(), 0.0);
  const auto av = na.val();
  const auto bv = nb.val();
  for (std::size_t i = 0; i < na.rows; ++i)
    for (std::size_t k = 0; k < na.cols; ++k) {
      const double aik = av[i * na.cols + k];
      for (std::size_t j = 0; j < nb.cols; ++j) n.value[i * nb.cols + j] += aik * bv[k * nb.cols + j];
    }
  return push(std::move(n));
}

namespace {

void require_same(std::size_t a, std::size_t b, const char* who) {
  if (a != b) throw DimensionError(std::string("tape ") + who + ": size mismatch");
}

}  // namespace

Tape::Id Tape::add(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require_same(na.size(), nb.size(), "add");
  Node n;
  n.op = Op::kAdd;
  n.rows = na.rows;
  n.cols = na.cols;
  n.in[0] = a;
  n.in[1] = b;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  const auto av = na.val();
  const auto bv = nb.val();
  n.value.resize(n.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = av[i] + bv[i];
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require_same(na.size(), nb.size(), "sub");
  Node n;
  n.op = Op::kSub;
  n.rows = na.rows;
  n.cols = na.cols;
  n.in[0] = a;
  n.in[1] = b;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  const auto av = na.val();
  const auto bv = nb.val();
  n.value.resize(n.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = av[i] - bv[i];
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double c) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kScale;
  n.rows = na.rows;
  n.cols = na.cols;
  n.in[0] = a;
  n.c0 = c;
  n.needs_grad = na.needs_grad;
  const auto av = na.val();
  n.value.resize(n.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = c * av[i];
  return push(std::move(n));
}

Tape::Id Tape::axpy(double c, Id x, Id y) {
  const Node& nx = node(x);
  const Node& ny = node(y);
  require_same(nx.size(), ny.size(), "axpy");
  Node n;
  n.op = Op::kAxpy;
  n.rows = ny.rows;
  n.cols = ny.cols;
  n.in[0] = x;
  n.in[1] = y;
  n.c0 = c;
  n.needs_grad = nx.needs_grad || ny.needs_grad;
  const auto xv = nx.val();
  const auto yv = ny.val();
  n.value.resize(n.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = yv[i] + c * xv[i];
  return push(std::move(n));
}

Tape::Id Tape::hadamard(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require_same(na.size(), nb.size(), "hadamard");
  Node n;
  n.op = Op::kHadamard;
  n.rows = na.rows;
  n.cols = na.cols;
  n.in[0] = a;
  n.in[1] = b;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  const auto av = na.val();
  const auto bv = nb.val();
  n.value.resize(n.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = av[i] * bv[i];
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kRelu;
  n.rows = na.rows;
  n.cols = na.cols;
  n.in[0] = a;
  n.needs_grad = na.needs_grad;
  const auto av = na.val();
  n.value.resize(n.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = av[i] > 0.0 ? av[i] : 0.0;
    if (n.needs_grad) min_kink_margin_ = std::min(min_kink_margin_, std::abs(av[i]));
  }
  return push(std::move(n));
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("tape clamp: lo > hi");
  const Node& na = node(a);
  Node n;
  n.op = Op::kClamp;
  n.rows = na.rows;
  n.cols = na.cols;
  n.in[0] = a;
  n.c0 = lo;
  n.c1 = hi;
  n.needs_grad = na.needs_grad;
  const auto av = na.val();
  n.value.resize(n.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = std::min(std::max(av[i], lo), hi);
    if (n.needs_grad) {
      min_kink_margin_ = std::min({min_kink_margin_, std::abs(av[i] - lo), std::abs(av[i] - hi)});
    }
  }
  return push(std::move(n));
}

Tape::Id Tape::kron_apply(Id x, Id h, std::size_t blocks) {
  const Node& nx = node(x);
  const Node& nh = node(h);
  if (nh.size() != blocks * nx.cols) throw DimensionError("tape kron_apply: length mismatch");
  Node n;
  n.op = Op::kKron;
  n.rows = blocks * nx.rows;
  n.cols = 1;
  n.in[0] = x;
  n.in[1] = h;
  n.aux = blocks;
  n.needs_grad = nx.needs_grad || nh.needs_grad;
  n.value.resize(n.size());
  detail::kron_apply_into(n.value, nx.val(), nx.rows, nx.cols, nh.val(), blocks);
  return push(std::move(n));
}

Tape::Id Tape::linear_solve(Id m, Id b, double eps_sing) {
  const Node& nm = node(m);
  const Node& nb = node(b);
  if (nm.rows != nm.cols || nb.size() != nm.rows) {
    throw DimensionError("tape linear_solve: shape mismatch");
  }
  Node n;
  n.op = Op::kLinearSolve;
  n.rows = nm.rows;
  n.cols = 1;
  n.in[0] = m;
  n.in[1] = b;
  const auto mv = nm.val();
  LuFactorization f = lu_factor(Matrix(nm.rows, nm.cols, Vector(mv.begin(), mv.end())), eps_sing);
  if (f.singular) {
    n.singular = true;
    n.value.assign(n.rows, 0.0);
  } else {
    n.value = lu_solve(f, nb.val());
    n.lu = std::move(f);
    n.needs_grad = nm.needs_grad || nb.needs_grad;
  }
  return push(std::move(n));
}

bool Tape::solve_was_singular(Id solve) const {
  const Node& n = node(solve);
  if (n.op != Op::kLinearSolve) throw TapeUsageError("tape: node is not a linear solve");
  return n.singular;
}

Tape::Id Tape::affine(Id bias, Id a, Id h, Id bmul, Id u) {
  const Node& nbias = node(bias);
  const std::size_t out = nbias.size();
  const bool has_h = a != kNone;
  const bool has_u = bmul != kNone;
  if (has_h != (h != kNone) || has_u != (u != kNone)) {
    throw TapeUsageError("tape affine: matrix and vector operands must be given together");
  }
  std::span<const double> av, hv, bv, uv;
  bool needs = nbias.needs_grad;
  if (has_h) {
    const Node& na = node(a);
    const Node& nh = node(h);
    if (na.rows != out || na.cols != nh.size()) throw DimensionError("tape affine: A shape");
    av = na.val();
    hv = nh.val();
    needs = needs || na.needs_grad || nh.needs_grad;
  }
  if (has_u) {
    const Node& nb = node(bmul);
    const Node& nu = node(u);
    if (nb.rows != out || nb.cols != nu.size()) throw DimensionError("tape affine: B shape");
    bv = nb.val();
    uv = nu.val();
    needs = needs || nb.needs_grad || nu.needs_grad;
  }
  Node n;
  n.op = Op::kAffine;
  n.rows = out;
  n.cols = 1;
  n.in[0] = bias;
  n.in[1] = a;
  n.in[2] = h;
  n.in[3] = bmul;
  n.in[4] = u;
  n.needs_grad = needs;
  n.value.resize(out);
  detail::affine_into(n.value, nbias.val(), av, hv, bv, uv);
  return push(std::move(n));
}

Tape::Id Tape::slice(Id a, std::size_t offset, std::size_t rows, std::size_t cols) {
  const Node& na = node(a);
  if (offset + rows * cols > na.size()) throw DimensionError("tape slice: out of range");
  Node n;
  n.op = Op::kSlice;
  n.rows = rows;
  n.cols = cols;
  n.in[0] = a;
  n.aux = offset;
  n.needs_grad = na.needs_grad;
  const auto av = na.val();
  n.value.assign(av.begin() + static_cast<std::ptrdiff_t>(offset),
                 av.begin() + static_cast<std::ptrdiff_t>(offset + rows * cols));
  return push(std::move(n));
}

Tape::Id Tape::place_column(Id base, Id v, std::size_t col) {
  const Node& nb = node(base);
  const Node& nv = node(v);
  if (col >= nb.cols || nv.size() > nb.rows) throw DimensionError("tape place_column: shape");
  Node n;
  n.op = Op::kPlaceColumn;
  n.rows = nb.rows;
  n.cols = nb.cols;
  n.in[0] = base;
  n.in[1] = v;
  n.aux = col;
  n.needs_grad = nb.needs_grad || nv.needs_grad;
  const auto bv = nb.val();
  n.value.assign(bv.begin(), bv.end());
  const auto vv = nv.val();
  for (std::size_t i = 0; i < vv.size(); ++i) n.value[i * n.cols + col] = vv[i];
  return push(std::move(n));
}

Tape::Id Tape::sq_dist(Id a, std::span<const double> target) {
  const Node& na = node(a);
  require_same(na.size(), target.size(), "sq_dist");
  Node n;
  n.op = Op::kSqDist;
  n.rows = 1;
  n.cols = 1;
  n.in[0] = a;
  n.needs_grad = na.needs_grad;
  n.extra.assign(target.begin(), target.end());
  const auto av = na.val();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - target[i];
    acc += d * d;
  }
  n.value = {acc};
  return push(std::move(n));
}

Tape::Id Tape::sum_squares(Id a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kSumSquares;
  n.rows = 1;
  n.cols = 1;
  n.in[0] = a;
  n.needs_grad = na.needs_grad;
  double acc = 0.0;
  for (double v : na.val()) acc += v * v;
  n.value = {acc};
  return push(std::move(n));
}

Tape::Id Tape::lincomb(std::span<const double> coeffs, std::span<const Id> ids) {
  if (coeffs.size() != ids.size() || ids.empty()) {
    throw DimensionError("tape lincomb: need matching, nonempty coefficient and input lists");
  }
  const Node& first = node(ids[0]);
  Node n;
  n.op = Op::kLinComb;
  n.rows = first.rows;
  n.cols = first.cols;
  n.value.assign(first.size(), 0.0);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Node& nk = node(ids[k]);
    require_same(nk.size(), first.size(), "lincomb");
    n.needs_grad = n.needs_grad || nk.needs_grad;
    const auto v = nk.val();
    if (k == 0) {
      for (std::size_t i = 0; i < v.size(); ++i) n.value[i] = coeffs[0] * v[i];
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) n.value[i] += coeffs[k] * v[i];
    }
  }
  n.extra.assign(coeffs.begin(), coeffs.end());
  n.extra_ids.assign(ids.begin(), ids.end());
  return push(std::move(n));
}

double* Tape::grad_buffer(Id id) {
  Node& n = nodes_[id];
  if (n.op == Op::kParam) return n.ext_grad;
  Vector& g = grads_[id];
  if (g.empty()) g.assign(n.size(), 0.0);
  return g.data();
}

void Tape::backward(Id root, double seed) {
  const Node& r = node(root);
  if (r.size() != 1) throw TapeUsageError("tape backward: root must be a scalar");
  grads_.assign(nodes_.size(), Vector{});
  backward_done_ = true;
  if (!r.needs_grad) return;
  grads_[root] = {seed};

  for (std::size_t idx = root + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    if (!n.needs_grad || n.op == Op::kParam || n.op == Op::kConstant) continue;
    if (grads_[idx].empty()) continue;
    const Vector& g = grads_[idx];
    auto wants = [&](Id id) { return id != kNone && nodes_[id].needs_grad; };

    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        break;
      case Op::kMatmul: {
        const Node& na = nodes_[n.in[0]];
        const Node& nb = nodes_[n.in[1]];
        const auto av = na.val();
        const auto bv = nb.val();
        const std::size_t r_ = na.rows, k_ = na.cols, c_ = nb.cols;
        if (wants(n.in[0])) {
          double* ga = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < r_; ++i)
            for (std::size_t k = 0; k < k_; ++k) {
              double acc = 0.0;
              for (std::size_t j = 0; j < c_; ++j) acc += g[i * c_ + j] * bv[k * c_ + j];
              ga[i * k_ + k] += acc;
            }
        }
        if (wants(n.in[1])) {
          double* gb = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < r_; ++i)
            for (std::size_t k = 0; k < k_; ++k) {
              const double aik = av[i * k_ + k];
              for (std::size_t j = 0; j < c_; ++j) gb[k * c_ + j] += aik * g[i * c_ + j];
            }
        }
        break;
      }
      case Op::kAdd:
      case Op::kSub: {
        const double sign = n.op == Op::kAdd ? 1.0 : -1.0;
        if (wants(n.in[0])) {
          double* ga = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (wants(n.in[1])) {
          double* gb = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
        }
        break;
      }
      case Op::kScale: {
        double* ga = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.c0 * g[i];
        break;
      }
      case Op::kAxpy: {
        if (wants(n.in[0])) {
          double* gx = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += n.c0 * g[i];
        }
        if (wants(n.in[1])) {
          double* gy = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i];
        }
        break;
      }
      case Op::kHadamard: {
        const auto av = nodes_[n.in[0]].val();
        const auto bv = nodes_[n.in[1]].val();
        if (wants(n.in[0])) {
          double* ga = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (wants(n.in[1])) {
          double* gb = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
        break;
      }
      case Op::kRelu: {
        const auto av = nodes_[n.in[0]].val();
        double* ga = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (av[i] > 0.0) ga[i] += g[i];
        }
        break;
      }
      case Op::kClamp: {
        const auto av = nodes_[n.in[0]].val();
        double* ga = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (av[i] >= n.c0 && av[i] <= n.c1) ga[i] += g[i];
        }
        break;
      }
      case Op::kKron: {
        const Node& nx = nodes_[n.in[0]];
        const Node& nh = nodes_[n.in[1]];
        const auto xv = nx.val();
        const auto hv = nh.val();
        const std::size_t xr = nx.rows, xc = nx.cols, blocks = n.aux;
        if (wants(n.in[1])) {
          double* gh = grad_buffer(n.in[1]);
          for (std::size_t blk = 0; blk < blocks; ++blk)
            for (std::size_t i = 0; i < xr; ++i) {
              const double gi = g[blk * xr + i];
              if (gi == 0.0) continue;
              const double* xrow = xv.data() + i * xc;
              for (std::size_t j = 0; j < xc; ++j) gh[blk * xc + j] += xrow[j] * gi;
            }
        }
        if (wants(n.in[0])) {
          double* gx = grad_buffer(n.in[0]);
          for (std::size_t blk = 0; blk < blocks; ++blk)
            for (std::size_t i = 0; i < xr; ++i) {
              const double gi = g[blk * xr + i];
              if (gi == 0.0) continue;
              for (std::size_t j = 0; j < xc; ++j) gx[i * xc + j] += gi * hv[blk * xc + j];
            }
        }
        break;
      }
      case Op::kLinearSolve: {
        // b_bar = M^-T g, M_bar = -(M^-T g) y^T.
        const Vector w = lu_solve_transpose(*n.lu, g);
        if (wants(n.in[1])) {
          double* gb = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < w.size(); ++i) gb[i] += w[i];
        }
        if (wants(n.in[0])) {
          double* gm = grad_buffer(n.in[0]);
          const std::size_t d = n.rows;
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) gm[i * d + j] -= w[i] * n.value[j];
        }
        break;
      }
      case Op::kAffine: {
        const std::size_t out = n.rows;
        if (wants(n.in[0])) {
          double* gbias = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < out; ++i) gbias[i] += g[i];
        }
        for (int pair = 0; pair < 2; ++pair) {
          const Id mat = n.in[1 + 2 * pair];
          const Id vec = n.in[2 + 2 * pair];
          if (mat == kNone) continue;
          const auto mv = nodes_[mat].val();
          const auto vv = nodes_[vec].val();
          const std::size_t w = vv.size();
          if (wants(mat)) {
            double* gm = grad_buffer(mat);
            for (std::size_t i = 0; i < out; ++i) {
              const double gi = g[i];
              if (gi == 0.0) continue;
              double* row = gm + i * w;
              for (std::size_t j = 0; j < w; ++j) row[j] += gi * vv[j];
            }
          }
          if (wants(vec)) {
            double* gv = grad_buffer(vec);
            for (std::size_t i = 0; i < out; ++i) {
              const double gi = g[i];
              if (gi == 0.0) continue;
              const double* row = mv.data() + i * w;
              for (std::size_t j = 0; j < w; ++j) gv[j] += row[j] * gi;
            }
          }
        }
        break;
      }
      case Op::kSlice: {
        double* ga = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[n.aux + i] += g[i];
        break;
      }
      case Op::kPlaceColumn: {
        const std::size_t vlen = nodes_[n.in[1]].size();
        if (wants(n.in[0])) {
          double* gb = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const bool replaced = i % n.cols == n.aux && i / n.cols < vlen;
            if (!replaced) gb[i] += g[i];
          }
        }
        if (wants(n.in[1])) {
          double* gv = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < vlen; ++i) gv[i] += g[i * n.cols + n.aux];
        }
        break;
      }
      case Op::kSqDist: {
        const auto av = nodes_[n.in[0]].val();
        double* ga = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < av.size(); ++i) ga[i] += 2.0 * g[0] * (av[i] - n.extra[i]);
        break;
      }
      case Op::kSumSquares: {
        const auto av = nodes_[n.in[0]].val();
        double* ga = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < av.size(); ++i) ga[i] += 2.0 * g[0] * av[i];
        break;
      }
      case Op::kLinComb: {
        for (std::size_t k = 0; k < n.extra_ids.size(); ++k) {
          const Id id = n.extra_ids[k];
          if (!wants(id)) continue;
          double* gk = grad_buffer(id);
          for (std::size_t i = 0; i < g.size(); ++i) gk[i] += n.extra[k] * g[i];
        }
        break;
      }
    }
  }
}

std::span<const double> Tape::grad(Id id) const {
  if (!backward_done_) throw TapeUsageError("tape: grad() requested before backward()");
  const Node& n = node(id);
  if (n.op == Op::kParam) return {n.ext_grad, n.size()};
  if (grads_[id].empty()) {
    static const Vector kEmpty;
    return kEmpty;
  }
  return grads_[id];
}

Adam::Adam(AdamConfig config, const std::vector<std::size_t>& sizes) : config_(config) {
  if (!(config_.lr > 0.0) || !(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0) || !(config_.eps > 0.0)) {
    throw std::invalid_argument("Adam: invalid hyperparameters");
  }
  for (std::size_t s : sizes) {
    m_.emplace_back(s, 0.0);
    v_.emplace_back(s, 0.0);
  }
}

void Adam::step(const std::vector<std::span<double>>& params,
                const std::vector<std::span<const double>>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DimensionError("Adam: parameter list does not match the optimizer state");
  }
  for (std::size_t k = 0; k < m_.size(); ++k) {
    if (params[k].size() != m_[k].size() || grads[k].size() != m_[k].size()) {
      throw DimensionError("Adam: array " + std::to_string(k) + " has the wrong size");
    }
  }
  ++t_;
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  constexpr double kTiny = std::numeric_limits<double>::min();
  for (std::size_t k = 0; k < m_.size(); ++k) {
    Vector& m = m_[k];
    Vector& v = v_[k];
    const auto g = grads[k];
    auto p = params[k];
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      // Dead units get zero gradients and their moments decay into subnormals,
      // which made late epochs 4x slower. The step they would give is below eps.
      if (std::fabs(m[i]) < kTiny) m[i] = 0.0;
      if (v[i] < kTiny) v[i] = 0.0;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> theta, std::span<const double> analytic,
                         double h, std::span<const std::size_t> coords) {
  if (analytic.size() != theta.size()) throw DimensionError("finite_diff_check: size mismatch");
  Vector probe(theta.begin(), theta.end());
  double worst = 0.0;
  auto check = [&](std::size_t i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i])));
  };
  if (coords.empty()) {
    for (std::size_t i = 0; i < theta.size(); ++i) check(i);
  } else {
    for (std::size_t i : coords) {
      if (i >= theta.size()) throw DimensionError("finite_diff_check: coordinate out of range");
      check(i);
    }
  }
  return worst;
}

}  // namespace sann
