#include "sann/field.hpp"

#include <string>
#include <utility>

namespace sann {

VectorFieldProgram::VectorFieldProgram(FieldDims dims, EvalFn eval,
                                       std::optional<TRange> t_range_hint)
    : dims_(dims), eval_(std::move(eval)), t_range_hint_(t_range_hint) {
  if (dims_.n < 1 || dims_.k < 1) throw DimensionError("VectorFieldProgram: n and k must be >= 1");
  if (!eval_) throw std::invalid_argument("VectorFieldProgram: empty eval");
  if (t_range_hint_ && !(t_range_hint_->lo <= t_range_hint_->hi)) {
    throw std::invalid_argument("VectorFieldProgram: t range hint has lo > hi");
  }
}

FieldOutput VectorFieldProgram::eval(std::span<const double> x, std::span<const double> z,
                                     double s) const {
  const std::size_t d = dims_.state_dim();
  if (x.size() != dims_.m) {
    throw DimensionError("field eval: x has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(dims_.m));
  }
  if (z.size() != d) {
    throw DimensionError("field eval: z has " + std::to_string(z.size()) + " entries, expected " +
                         std::to_string(d));
  }
  FieldOutput out = eval_(x, z, s);
  if (out.m.rows() != d || out.m.cols() != d || out.b.size() != d) {
    throw DimensionError("field eval: program returned M " + std::to_string(out.m.rows()) + "x" +
                         std::to_string(out.m.cols()) + ", b " + std::to_string(out.b.size()) +
                         " for state dimension " + std::to_string(d));
  }
  return out;
}

VectorFieldProgram VectorFieldProgram::with_t_range(TRange range) const {
  return VectorFieldProgram(dims_, eval_, range);
}

}  // namespace sann
