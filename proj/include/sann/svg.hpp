#pragma once

#include <string>
#include <vector>

#include "sann/linalg.hpp"

namespace sann {

struct PlotSeries {
  std::string name;
  Vector x;
  Vector y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  // Written verbatim into an XML comment at the top of the file.
  std::string comment;
};

// Standalone SVG with one polyline per series. Output depends only on the
// arguments. Throws std::invalid_argument on an empty series list, an empty
// series, or mismatched x/y lengths. On a log axis non-positive values are
// dropped.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts);

// Throws std::runtime_error when the file cannot be written.
void emit_svg(const std::vector<PlotSeries>& series, const std::string& path,
              const PlotOptions& opts);

}  // namespace sann
