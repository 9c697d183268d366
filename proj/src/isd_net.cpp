#include "sann/isd_net.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace sann {

namespace {

std::string str(std::size_t v) { return std::to_string(v); }

void check_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string("MrnnParams: ") + what + " is " + str(m.rows()) + "x" +
                         str(m.cols()) + ", expected " + str(rows) + "x" + str(cols));
  }
}

void glorot_fill(Matrix& w, std::size_t fan_in, std::size_t fan_out, Rng& rng, double scale) {
  if (w.size() == 0) return;
  const double bound = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
}

}  // namespace

IsdNetSpec IsdNetSpec::vector_input(std::size_t m, std::size_t n, std::size_t k) {
  IsdNetSpec s;
  s.m = m;
  s.n = n;
  s.k = k;
  s.packing = Packing::kVector;
  s.validate();
  return s;
}

IsdNetSpec IsdNetSpec::matrix_input(std::size_t rows, std::size_t cols, std::size_t n,
                                    std::size_t k) {
  IsdNetSpec s;
  s.m = rows * cols;
  s.n = n;
  s.k = k;
  s.packing = Packing::kMatrix;
  s.x_rows = rows;
  s.x_cols = cols;
  s.validate();
  return s;
}

IsdNetSpec IsdNetSpec::linear_solve(std::size_t n, std::size_t k) {
  IsdNetSpec s;
  s.m = n * n + n;
  s.n = n;
  s.k = k;
  s.packing = Packing::kMatrixRhs;
  s.x_rows = n;
  s.x_cols = n;
  s.validate();
  return s;
}

void IsdNetSpec::validate() const {
  if (m < 1 || n < 1 || k < 1) throw DimensionError("IsdNetSpec: m, n, k must all be >= 1");
  switch (packing) {
    case Packing::kVector:
      break;
    case Packing::kMatrix:
      if (x_rows * x_cols != m || m == 0) {
        throw DimensionError("IsdNetSpec: matrix packing needs m = x_rows * x_cols");
      }
      break;
    case Packing::kMatrixRhs:
      if (x_rows != x_cols || x_rows * x_cols + x_rows != m || m == 0) {
        throw DimensionError("IsdNetSpec: matrix+rhs packing needs square X and m = r*r + r");
      }
      break;
  }
}

std::size_t IsdNetSpec::packed_rows() const {
  const std::size_t data_rows = packing == Packing::kVector ? m : x_rows;
  return std::max(data_rows, state_dim());
}

std::size_t IsdNetSpec::packed_cols() const {
  switch (packing) {
    case Packing::kVector:
      return 3;
    case Packing::kMatrix:
      return x_cols + 2;
    case Packing::kMatrixRhs:
      return x_cols + 3;
  }
  return 0;
}

Matrix pack_input(const IsdNetSpec& spec, std::span<const double> x, std::span<const double> z,
                  double s) {
  if (x.size() != spec.m) {
    throw DimensionError("pack_input: x has " + str(x.size()) + " entries, expected " +
                         str(spec.m));
  }
  if (z.size() != spec.state_dim()) {
    throw DimensionError("pack_input: z has " + str(z.size()) + " entries, expected " +
                         str(spec.state_dim()));
  }
  Matrix p(spec.packed_rows(), spec.packed_cols());
  switch (spec.packing) {
    case Packing::kVector:
      for (std::size_t i = 0; i < spec.m; ++i) p(i, 0) = x[i];
      break;
    case Packing::kMatrix:
      for (std::size_t i = 0; i < spec.x_rows; ++i)
        for (std::size_t j = 0; j < spec.x_cols; ++j) p(i, j) = x[i * spec.x_cols + j];
      break;
    case Packing::kMatrixRhs: {
      const std::size_t r = spec.x_rows;
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) p(i, j) = x[i * r + j];
        p(i, r) = x[r * r + i];
      }
      break;
    }
  }
  const std::size_t zc = spec.z_column();
  for (std::size_t i = 0; i < z.size(); ++i) p(i, zc) = z[i];
  for (std::size_t i = 0; i < p.rows(); ++i) p(i, zc + 1) = s;
  return p;
}

UnpackedInput unpack_input(const IsdNetSpec& spec, const Matrix& packed) {
  if (packed.rows() != spec.packed_rows() || packed.cols() != spec.packed_cols()) {
    throw DimensionError("unpack_input: packed matrix has the wrong shape");
  }
  UnpackedInput u;
  u.x.resize(spec.m);
  switch (spec.packing) {
    case Packing::kVector:
      for (std::size_t i = 0; i < spec.m; ++i) u.x[i] = packed(i, 0);
      break;
    case Packing::kMatrix:
      for (std::size_t i = 0; i < spec.x_rows; ++i)
        for (std::size_t j = 0; j < spec.x_cols; ++j) u.x[i * spec.x_cols + j] = packed(i, j);
      break;
    case Packing::kMatrixRhs: {
      const std::size_t r = spec.x_rows;
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) u.x[i * r + j] = packed(i, j);
        u.x[r * r + i] = packed(i, r);
      }
      break;
    }
  }
  const std::size_t zc = spec.z_column();
  u.z.resize(spec.state_dim());
  for (std::size_t i = 0; i < u.z.size(); ++i) u.z[i] = packed(i, zc);
  u.s = packed(0, zc + 1);
  return u;
}

void MrnnParams::validate() const {
  if (layers.empty()) throw DimensionError("MrnnParams: at least one layer is required");
  if (input_cols == 0 || input_rows == 0) throw DimensionError("MrnnParams: empty input shape");
  if (hidden_widths.size() + 1 != layers.size()) {
    throw DimensionError("MrnnParams: hidden_widths must have one entry fewer than layers");
  }
  std::size_t in = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const MrnnLayer& ly = layers[l];
    const std::size_t out = ly.b0.size();
    if (l + 1 < layers.size() && out != hidden_widths[l]) {
      throw DimensionError("MrnnParams: layer " + str(l) + " width disagrees with hidden_widths");
    }
    if (in % input_cols != 0) {
      throw DimensionError("MrnnParams: layer " + str(l) + " input width " + str(in) +
                           " is not a multiple of the packed column count " + str(input_cols));
    }
    const std::size_t kron = (in / input_cols) * input_rows;
    if (ly.b1.size() != out) throw DimensionError("MrnnParams: b1 length mismatch");
    check_shape(ly.a0, out, in, "a0");
    check_shape(ly.a1, out, in, "a1");
    check_shape(ly.bmul0, out, kron, "bmul0");
    check_shape(ly.bmul1, out, kron, "bmul1");
    in = out;
  }
}

std::size_t MrnnParams::output_width() const {
  return layers.empty() ? 0 : layers.back().out_width();
}

std::size_t MrnnParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors()) total += t.size();
  return total;
}

std::vector<std::span<double>> MrnnParams::tensors() {
  std::vector<std::span<double>> out;
  out.reserve(layers.size() * 6);
  for (auto& ly : layers) {
    out.emplace_back(ly.a0.data());
    out.emplace_back(ly.b0);
    out.emplace_back(ly.bmul0.data());
    out.emplace_back(ly.a1.data());
    out.emplace_back(ly.b1);
    out.emplace_back(ly.bmul1.data());
  }
  return out;
}

std::vector<std::span<const double>> MrnnParams::tensors() const {
  std::vector<std::span<const double>> out;
  out.reserve(layers.size() * 6);
  for (const auto& ly : layers) {
    out.emplace_back(ly.a0.data());
    out.emplace_back(ly.b0);
    out.emplace_back(ly.bmul0.data());
    out.emplace_back(ly.a1.data());
    out.emplace_back(ly.b1);
    out.emplace_back(ly.bmul1.data());
  }
  return out;
}

MrnnParams MrnnParams::zeros_like() const {
  MrnnParams z = *this;
  for (auto t : z.tensors()) std::fill(t.begin(), t.end(), 0.0);
  return z;
}

MrnnParams make_mrnn_zero(const IsdNetSpec& spec, std::span<const std::size_t> hidden_widths) {
  spec.validate();
  MrnnParams p;
  p.input_rows = spec.packed_rows();
  p.input_cols = spec.packed_cols();
  p.hidden_widths.assign(hidden_widths.begin(), hidden_widths.end());
  std::size_t in = 0;
  for (std::size_t l = 0; l <= hidden_widths.size(); ++l) {
    const std::size_t out = l < hidden_widths.size() ? hidden_widths[l] : spec.output_dim();
    if (out == 0) throw DimensionError("make_mrnn: zero hidden width");
    if (l < hidden_widths.size() && out % p.input_cols != 0) {
      throw DimensionError("make_mrnn: hidden width " + str(out) +
                           " is not a multiple of the packed column count " + str(p.input_cols));
    }
    const std::size_t kron = (in / p.input_cols) * p.input_rows;
    MrnnLayer ly;
    ly.a0 = Matrix(out, in);
    ly.b0.assign(out, 0.0);
    ly.bmul0 = Matrix(out, kron);
    ly.a1 = Matrix(out, in);
    ly.b1.assign(out, 0.0);
    ly.bmul1 = Matrix(out, kron);
    p.layers.push_back(std::move(ly));
    in = out;
  }
  p.validate();
  return p;
}

MrnnParams make_mrnn(const IsdNetSpec& spec, std::span<const std::size_t> hidden_widths,
                     Rng& rng, double head_scale) {
  if (!(head_scale >= 0.0)) throw std::invalid_argument("make_mrnn: head_scale must be >= 0");
  MrnnParams p = make_mrnn_zero(spec, hidden_widths);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    MrnnLayer& ly = p.layers[l];
    const std::size_t out = ly.out_width();
    const double scale = l + 1 == p.layers.size() ? head_scale : 1.0;
    glorot_fill(ly.a0, ly.a0.cols(), out, rng, scale);
    glorot_fill(ly.bmul0, ly.bmul0.cols(), out, rng, scale);
    glorot_fill(ly.a1, ly.a1.cols(), out, rng, scale);
    glorot_fill(ly.bmul1, ly.bmul1.cols(), out, rng, scale);
    if (l == 0 && p.layers.size() > 1) {
      for (double& v : ly.b0) v = rng.uniform(-1.0, 1.0);
      for (double& v : ly.b1) v = rng.uniform(-1.0, 1.0);
    }
  }
  const std::size_t d = spec.state_dim();
  auto& head = p.layers.back().b0;
  for (std::size_t i = 0; i < d; ++i) head[i * d + i] = 1.0;
  return p;
}

Vector mrnn_forward(const MrnnParams& params, const Matrix& input) {
  if (input.rows() != params.input_rows || input.cols() != params.input_cols) {
    throw DimensionError("mrnn_forward: input is " + str(input.rows()) + "x" +
                         str(input.cols()) + ", expected " + str(params.input_rows) + "x" +
                         str(params.input_cols));
  }
  Vector h;
  Vector u;
  Vector pre0;
  Vector pre1;
  for (const MrnnLayer& ly : params.layers) {
    const std::size_t out = ly.out_width();
    const std::size_t blocks = h.size() / params.input_cols;
    u.assign(blocks * params.input_rows, 0.0);
    detail::kron_apply_into(u, input.data(), input.rows(), input.cols(), h, blocks);
    pre0.assign(out, 0.0);
    pre1.assign(out, 0.0);
    detail::affine_into(pre0, ly.b0, ly.a0.data(), h, ly.bmul0.data(), u);
    detail::affine_into(pre1, ly.b1, ly.a1.data(), h, ly.bmul1.data(), u);
    h.resize(out);
    for (std::size_t i = 0; i < out; ++i) h[i] = pre0[i] + (pre1[i] > 0.0 ? pre1[i] : 0.0);
  }
  return h;
}

FieldOutput isdnet_forward(const IsdNetSpec& spec, const MrnnParams& params,
                           std::span<const double> x, std::span<const double> z, double s) {
  if (params.output_width() != spec.output_dim()) {
    throw DimensionError("isdnet_forward: network emits " + str(params.output_width()) +
                         " values, spec needs " + str(spec.output_dim()));
  }
  Vector raw = mrnn_forward(params, pack_input(spec, x, z, s));
  const std::size_t d = spec.state_dim();
  FieldOutput out;
  out.b.assign(raw.begin() + static_cast<std::ptrdiff_t>(d * d), raw.end());
  // Copied rather than moved into Matrix(rows, cols, data) so that non-finite
  // entries reach the solver's step-indexed guard instead of throwing here.
  out.m = Matrix(d, d);
  std::copy_n(raw.begin(), d * d, out.m.data().begin());
  return out;
}

VectorFieldProgram mrnn_field(const IsdNetSpec& spec, MrnnParams params) {
  params.validate();
  if (params.output_width() != spec.output_dim()) {
    throw DimensionError("mrnn_field: network output width does not match spec");
  }
  auto shared = std::make_shared<const MrnnParams>(std::move(params));
  return VectorFieldProgram(spec.dims(), [spec, shared](std::span<const double> x,
                                                        std::span<const double> z, double s) {
    return isdnet_forward(spec, *shared, x, z, s);
  });
}

}  // namespace sann
