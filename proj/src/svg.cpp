#include "sann/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sann {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// "--" is not allowed inside XML comments.
std::string comment_safe(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '-' && !out.empty() && out.back() == '-') out += ' ';
    out += c;
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo < hi)) {
      const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= d;
      hi += d;
    }
  }
};

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts) {
  if (series.empty()) throw std::invalid_argument("render_svg: no series");
  Range xr, yr;
  for (const auto& s : series) {
    if (s.x.empty()) throw std::invalid_argument("render_svg: series '" + s.name + "' is empty");
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("render_svg: series '" + s.name + "' has x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (opts.log_y && s.y[i] <= 0.0) continue;
      xr.add(s.x[i]);
      yr.add(opts.log_y ? std::log10(s.y[i]) : s.y[i]);
    }
  }
  if (!(xr.lo <= xr.hi)) xr = {0.0, 1.0};
  if (!(yr.lo <= yr.hi)) yr = {0.0, 1.0};
  xr.pad();
  yr.pad();

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
     << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << " " << num(kHeight) << "\">\n";
  if (!opts.comment.empty()) os << "<!-- " << comment_safe(opts.comment) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opts.title.empty()) {
    os << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"15\">" << escape(opts.title) << "</text>\n";
  }
  os << "<g stroke=\"black\" stroke-width=\"1\">\n"
     << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw)
     << "\" y2=\"" << num(kTop + ph) << "\"/>\n"
     << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
     << "\" y2=\"" << num(kTop + ph) << "\"/>\n</g>\n";

  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    os << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(kTop + ph + 16)
       << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(fy) + 4)
       << "\" text-anchor=\"end\">" << (opts.log_y ? "1e" + num(fy) : num(fy)) << "</text>\n";
  }
  if (!opts.x_label.empty()) {
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 10)
       << "\" text-anchor=\"middle\">" << escape(opts.x_label) << "</text>\n";
  }
  if (!opts.y_label.empty()) {
    os << "<text x=\"14\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" "
       << "transform=\"rotate(-90 14 " << num(kTop + ph / 2) << ")\">"
       << escape(opts.y_label) << (opts.log_y ? " (log10)" : "") << "</text>\n";
  }
  os << "</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kPalette[k % 10]
       << "\" data-name=\"" << escape(s.name) << "\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (opts.log_y && s.y[i] <= 0.0) continue;
      const double y = opts.log_y ? std::log10(s.y[i]) : s.y[i];
      os << (first ? "" : " ") << num(px(s.x[i])) << "," << num(py(y));
      first = false;
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_svg(const std::vector<PlotSeries>& series, const std::string& path,
              const PlotOptions& opts) {
  const std::string text = render_svg(series, opts);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_svg: cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("emit_svg: write failed for " + path);
}

}  // namespace sann
