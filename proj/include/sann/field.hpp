#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "sann/linalg.hpp"

namespace sann {

// The (M, b) pair a vector field emits at one point (x, z, s).
struct FieldOutput {
  Matrix m;
  Vector b;
};

// x has m entries; the ODE state z = (y, t) has n + k entries.
struct FieldDims {
  std::size_t m = 0;
  std::size_t n = 1;
  std::size_t k = 1;

  std::size_t state_dim() const { return n + k; }
  bool operator==(const FieldDims&) const = default;
};

// Closed interval of auxiliary-time values a field's trajectories stay in.
struct TRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Any rule (x, z, s) -> (M, b) driving the SANN ODE. Trained ISD networks and
// the hand-built constructions are both instances. Immutable once built.
class VectorFieldProgram {
 public:
  using EvalFn =
      std::function<FieldOutput(std::span<const double> x, std::span<const double> z, double s)>;

  VectorFieldProgram(FieldDims dims, EvalFn eval, std::optional<TRange> t_range_hint = {});

  // Checks argument and result shapes; throws DimensionError on mismatch.
  FieldOutput eval(std::span<const double> x, std::span<const double> z, double s) const;

  const FieldDims& dims() const { return dims_; }
  const std::optional<TRange>& t_range_hint() const { return t_range_hint_; }

  VectorFieldProgram with_t_range(TRange range) const;

 private:
  FieldDims dims_;
  EvalFn eval_;
  std::optional<TRange> t_range_hint_;
};

}  // namespace sann
