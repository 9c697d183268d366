#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sann/field.hpp"
#include "sann/linalg.hpp"
#include "sann/random.hpp"

namespace sann {

// How (x, z, s) is laid out as the matrix fed to the MRNN.
enum class Packing {
  kVector,     // [x | z | s*1], one column each
  kMatrix,     // x is a row-major x_rows x x_cols matrix X: [X | z | s*1]
  kMatrixRhs,  // x = vec(X) ++ g with X square: [X | g | z | s*1]
};

// Shape of an ISDnet(m, n, k) map (x, z, s) -> (M, b).
struct IsdNetSpec {
  std::size_t m = 1;
  std::size_t n = 1;
  std::size_t k = 1;
  Packing packing = Packing::kVector;
  std::size_t x_rows = 0;  // matrix packings only
  std::size_t x_cols = 0;

  static IsdNetSpec vector_input(std::size_t m, std::size_t n, std::size_t k = 1);
  static IsdNetSpec matrix_input(std::size_t rows, std::size_t cols, std::size_t n,
                                 std::size_t k = 1);
  // Input (X, g) with X n x n, output y with n entries.
  static IsdNetSpec linear_solve(std::size_t n, std::size_t k = 1);

  void validate() const;
  FieldDims dims() const { return {m, n, k}; }
  std::size_t state_dim() const { return n + k; }
  std::size_t output_dim() const { return state_dim() * state_dim() + state_dim(); }
  std::size_t packed_rows() const;
  std::size_t packed_cols() const;
  std::size_t z_column() const { return packed_cols() - 2; }
};

// Zero-padded column layout; see Packing. Throws DimensionError on mismatch.
Matrix pack_input(const IsdNetSpec& spec, std::span<const double> x, std::span<const double> z,
                  double s);

struct UnpackedInput {
  Vector x;
  Vector z;
  double s = 0.0;
};
UnpackedInput unpack_input(const IsdNetSpec& spec, const Matrix& packed);

// One layer of
//   h_l = b0 + A0 h + B0 (I (x) X) h + ReLU(b1 + A1 h + B1 (I (x) X) h).
struct MrnnLayer {
  Matrix a0;
  Vector b0;
  Matrix bmul0;
  Matrix a1;
  Vector b1;
  Matrix bmul1;

  std::size_t in_width() const { return a0.cols(); }
  std::size_t out_width() const { return b0.size(); }
};

struct MrnnParams {
  std::vector<MrnnLayer> layers;
  std::size_t input_rows = 0;
  std::size_t input_cols = 0;
  std::vector<std::size_t> hidden_widths;

  // Throws DimensionError when shapes do not chain.
  void validate() const;
  std::size_t output_width() const;
  std::size_t parameter_count() const;

  // Every weight array in a fixed order: per layer a0, b0, bmul0, a1, b1, bmul1.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  MrnnParams zeros_like() const;
};

// All-zero parameters with the layer shapes implied by spec and widths. The
// first layer sees h_0 = 0 and therefore has zero input width; every hidden
// width must be a multiple of spec.packed_cols().
MrnnParams make_mrnn_zero(const IsdNetSpec& spec, std::span<const std::size_t> hidden_widths);

// Glorot-uniform weights, with the output layer's weights further scaled by
// head_scale. The first layer's biases are drawn from U[-1, 1] (with h_0 = 0
// they are the only source of signal), and the M part of the final constant
// bias is vec(I), so an untrained net emits M close to I.
MrnnParams make_mrnn(const IsdNetSpec& spec, std::span<const std::size_t> hidden_widths, Rng& rng,
                     double head_scale = 1e-2);

Vector mrnn_forward(const MrnnParams& params, const Matrix& input);

// Splits the raw MRNN output row-major into M ((n+k) x (n+k)) and b (n+k).
FieldOutput isdnet_forward(const IsdNetSpec& spec, const MrnnParams& params,
                           std::span<const double> x, std::span<const double> z, double s);

// Wraps a trained network as a vector field. Parameters are copied.
VectorFieldProgram mrnn_field(const IsdNetSpec& spec, MrnnParams params);

}  // namespace sann
