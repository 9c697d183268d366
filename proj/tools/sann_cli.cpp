// Experiment runner: demos of the exact constructions, the two training
// experiments, the transformer block and the gradient check. Each run writes
// <command>.json, <command>.csv and <command>.svg into the output directory.
// Exit codes: 0 success, 1 a checked threshold failed, 2 usage or config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sann/bench_linear.hpp"
#include "sann/checkpoint.hpp"
#include "sann/eit.hpp"
#include "sann/glue_check.hpp"
#include "sann/gradcheck.hpp"
#include "sann/homotopy_fields.hpp"
#include "sann/sa_transformer.hpp"
#include "sann/sann_core.hpp"
#include "sann/svg.hpp"
#include "sann/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sann;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shared by every command: where outputs go and what gets embedded in them.
class Run {
 public:
  Run(std::string command, fs::path out_dir, json config)
      : command_(std::move(command)), dir_(std::move(out_dir)), config_(std::move(config)) {
    fs::create_directories(dir_);
  }

  void write_json(json body) const {
    json doc;
    doc["tool"] = "sann_cli";
    doc["version"] = kVersion;
    doc["command"] = command_;
    doc["config"] = config_;
    doc["results"] = std::move(body);
    write_text(".json", doc.dump(2) + "\n");
  }

  // `rows` are already comma-joined.
  void write_csv(const std::string& header, const std::vector<std::string>& rows) const {
    std::ostringstream os;
    os << "# sann_cli " << kVersion << " " << command_ << "\n";
    os << "# config: " << config_.dump() << "\n";
    os << header << "\n";
    for (const auto& r : rows) os << r << "\n";
    write_text(".csv", os.str());
  }

  void write_svg(const std::vector<PlotSeries>& series, PlotOptions opts) const {
    opts.comment = "sann_cli " + std::string(kVersion) + " " + command_ + " config " + config_.dump();
    emit_svg(series, (dir_ / (command_ + ".svg")).string(), opts);
  }

  const fs::path& dir() const { return dir_; }

 private:
  void write_text(const std::string& ext, const std::string& text) const {
    const fs::path path = dir_ / (command_ + ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  }

  std::string command_;
  fs::path dir_;
  json config_;
};

int verdict(bool pass, const std::string& what) {
  std::cout << (pass ? "PASS " : "FAIL ") << what << "\n";
  return pass ? 0 : 1;
}

// Symmetric grid on [-range, range]; an odd count puts an exact 0 in the middle.
Vector symmetric_grid(std::size_t points, double range) {
  Vector xs(points);
  const double half = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i)
    xs[i] = range * (2.0 * static_cast<double>(i) - half) / half;
  return xs;
}

void log_epoch(const std::string& model, const EpochLog& e) {
  std::fprintf(stderr, "[%s] epoch %zu loss %.6g val %.6g (%.1fs)\n", model.c_str(), e.epoch,
               e.train_loss, e.val_metric, e.seconds);
}

json report_json(const TrainReport& r) {
  return {{"model", r.model},
          {"parameter_count", r.parameter_count},
          {"initial_val_metric", r.initial_val_metric},
          {"final_val_metric", r.final_val_metric},
          {"train_loss", r.train_loss},
          {"val_metric", r.val_metric},
          {"seed", r.seed}};
}

std::vector<std::string> curve_rows(const std::vector<const TrainReport*>& reports) {
  std::vector<std::string> rows;
  for (const TrainReport* r : reports)
    for (std::size_t e = 0; e < r->val_metric.size(); ++e)
      rows.push_back(r->model + "," + std::to_string(e + 1) + "," + fmt(r->train_loss[e]) + "," +
                     fmt(r->val_metric[e]));
  return rows;
}

PlotSeries val_curve(const TrainReport& r) {
  PlotSeries s{r.model, {0.0}, {r.initial_val_metric}};
  for (std::size_t e = 0; e < r.val_metric.size(); ++e) {
    s.x.push_back(static_cast<double>(e + 1));
    s.y.push_back(r.val_metric[e]);
  }
  return s;
}

Scheme scheme_or_usage(const std::string& name) {
  try {
    return parse_scheme(name);
  } catch (const std::invalid_argument&) {
    throw UsageError("scheme: expected euler or rk4, got '" + name + "'");
  }
}

// ---------------------------------------------------------------------------

struct JacobiOpts {
  std::size_t n = 50;
  std::size_t steps = 100;
  std::size_t systems = 20;
  std::uint64_t seed = 7;
};

int jacobi_demo(const JacobiOpts& o, const fs::path& out) {
  if (o.n < 1 || o.steps < 1 || o.systems < 1) throw UsageError("n, steps and systems must be >= 1");
  const Run run("jacobi-demo", out,
                {{"n", o.n}, {"steps", o.steps}, {"systems", o.systems}, {"seed", o.seed}});
  Rng rng(o.seed);
  const VectorFieldProgram field = jacobi_field(o.n, o.steps);
  SannConfig cfg;
  cfg.steps = o.steps;
  cfg.c_max = kJacobiCMax;
  cfg.record_trajectory = true;

  std::vector<PlotSeries> series;
  std::vector<std::string> rows;
  Vector finals;
  for (std::size_t k = 0; k < o.systems; ++k) {
    const LinearSolveSample sys = gen_dd_system(o.n, rng);
    const Sample s = to_sample(sys);
    const Vector z0(o.n + 1, 0.0);
    const Trajectory traj = ode_solve(field, s.x, z0, 0.0, 1.0, cfg);
    PlotSeries ps{"system " + std::to_string(k), {}, {}};
    const double gnorm = norm2(sys.g);
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
      const auto& st = traj.states[j];
      const double rel = linear_residual(s, std::span(st.z).first(o.n)) / gnorm;
      rows.push_back(std::to_string(k) + "," + std::to_string(j) + "," + fmt(st.s) + "," + fmt(rel));
      ps.x.push_back(static_cast<double>(j));
      ps.y.push_back(rel);
    }
    finals.push_back(ps.y.back());
    series.push_back(std::move(ps));
  }
  double worst = 0.0;
  for (double v : finals) worst = std::max(worst, v);
  const double threshold = 1e-10;
  run.write_csv("system,step,s,relative_residual", rows);
  run.write_svg(series, {"Jacobi vector field: residual per Euler step", "step",
                         "||Xy - g|| / ||g||", true, ""});
  run.write_json({{"final_relative_residuals", finals},
                  {"max_final_relative_residual", worst},
                  {"threshold", threshold},
                  {"pass", worst <= threshold}});
  std::cout << "max final relative residual " << worst << "\n";
  return verdict(worst <= threshold, "jacobi residual <= 1e-10 ||g||");
}

// ---------------------------------------------------------------------------

struct GridOpts {
  std::size_t points = 201;
  double range = 2.0;
  std::size_t steps = 16;
};

void check_grid(const GridOpts& o) {
  if (o.points < 2) throw UsageError("points must be >= 2");
  if (!(o.range > 0.0)) throw UsageError("range must be > 0");
  if (o.steps < 1) throw UsageError("steps must be >= 1");
}

int heaviside_demo(const GridOpts& o, const fs::path& out) {
  check_grid(o);
  const Run run("heaviside-demo", out, {{"points", o.points}, {"range", o.range}, {"steps", o.steps}});
  const VectorFieldProgram f = heaviside_field();
  SannConfig cfg;
  cfg.steps = o.steps;
  cfg.c_max = kHeavisideCMax;
  PlotSeries ps{"F(x)", {}, {}};
  std::vector<std::string> rows;
  std::size_t mismatches = 0;
  double f_at_zero = std::numeric_limits<double>::quiet_NaN();
  for (double x : symmetric_grid(o.points, o.range)) {
    const double y = sann_eval(f, Vector{x}, cfg)[0];
    if (y != (x > 0.0 ? 1.0 : 0.0)) ++mismatches;
    if (x == 0.0) f_at_zero = y;
    rows.push_back(fmt(x) + "," + fmt(y));
    ps.x.push_back(x);
    ps.y.push_back(y);
  }
  run.write_csv("x,F", rows);
  run.write_svg({ps}, {"Heaviside SANN output", "x", "F(x)", false, ""});
  run.write_json({{"mismatches", mismatches},
                  {"F_at_zero", std::isnan(f_at_zero) ? json(nullptr) : json(f_at_zero)},
                  {"pass", mismatches == 0}});
  return verdict(mismatches == 0, "outputs equal the step function exactly");
}

int charfn_demo(const GridOpts& o, const fs::path& out) {
  check_grid(o);
  const Run run("charfn-demo", out, {{"points", o.points}, {"range", o.range}, {"steps", o.steps},
                                     {"g", "max(0, -x)^2"}});
  const VectorFieldProgram f = characteristic_field(1, [](std::span<const double> x) {
    const double v = std::max(0.0, -x[0]);
    return v * v;
  });
  SannConfig cfg;
  cfg.steps = o.steps;
  PlotSeries ps{"t(x)", {}, {}};
  std::vector<std::string> rows;
  std::size_t mismatches = 0;
  for (double x : symmetric_grid(o.points, o.range)) {
    const Vector z0(2, 0.0);
    const double t = ode_solve(f, Vector{x}, z0, 0.0, 1.0, cfg).final_state[1];
    if (t != (x < 0.0 ? 1.0 : 0.0)) ++mismatches;
    rows.push_back(fmt(x) + "," + fmt(t));
    ps.x.push_back(x);
    ps.y.push_back(t);
  }
  run.write_csv("x,t", rows);
  run.write_svg({ps}, {"Characteristic function of {g > 0}", "x", "t output", false, ""});
  run.write_json({{"mismatches", mismatches}, {"pass", mismatches == 0}});
  return verdict(mismatches == 0, "t output is the exact indicator of x < 0");
}

// ---------------------------------------------------------------------------

struct TraceOpts {
  std::vector<double> xs = {1.0, 2.0, 4.0, 9.0};
  std::size_t steps = 1000;
  double start = 1.0;
};

int trace_sqrt(const TraceOpts& o, const fs::path& out) {
  if (o.steps < 1) throw UsageError("steps must be >= 1");
  for (double x : o.xs)
    if (!(x > 0.0)) throw UsageError("x: values must be > 0");
  const Run run("trace-sqrt", out, {{"x", o.xs}, {"steps", o.steps}, {"start", o.start}});
  const double bound = 5.0 / static_cast<double>(o.steps);
  std::vector<PlotSeries> series;
  std::vector<std::string> rows;
  json results = json::array();
  bool pass = true;
  for (double x : o.xs) {
    const HomotopyProblem p = sqrt_homotopy(o.start, x);
    CurveTracerConfig tc;
    tc.beta = arc_length_to_t1(p);
    SannConfig cfg;
    cfg.steps = o.steps;
    cfg.c_max = 2.0 * tc.beta;
    cfg.record_trajectory = true;
    const Trajectory traj = trace_homotopy(p, tc, cfg);
    PlotSeries ps{"x = " + fmt(x), {}, {}};
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
      const auto& st = traj.states[j];
      rows.push_back(fmt(x) + "," + std::to_string(j) + "," + fmt(st.s) + "," + fmt(st.z[0]) +
                     "," + fmt(st.z[1]));
      ps.x.push_back(st.z[1]);
      ps.y.push_back(st.z[0]);
    }
    series.push_back(std::move(ps));
    const double err = std::abs(traj.final_state[0] - std::sqrt(x));
    pass = pass && err <= bound;
    results.push_back({{"x", x}, {"beta", tc.beta}, {"y_final", traj.final_state[0]},
                       {"t_final", traj.final_state[1]}, {"abs_error", err}});
    std::cout << "x " << x << " y(1) " << traj.final_state[0] << " error " << err << "\n";
  }
  run.write_csv("x,step,s,y,t", rows);
  run.write_svg(series, {"Arc-length trace of (1-t)(y-a) + t(y^2-x)", "t", "y", false, ""});
  run.write_json({{"traces", results}, {"bound", bound}, {"pass", pass}});
  return verdict(pass, "|y(1) - sqrt(x)| <= 5/N");
}

// ---------------------------------------------------------------------------

int glue_check(const GlueCheckOptions& o, const fs::path& out) {
  if (o.trials < 1) throw UsageError("trials must be >= 1");
  if (o.steps < 2 || o.steps % 2 != 0) throw UsageError("steps must be even and >= 2");
  const Run run("glue-check", out, {{"trials", o.trials}, {"seed", o.seed}, {"steps", o.steps}});
  const auto entries = run_glue_checks(o);
  const double tol = 1e-12;
  json results = json::array();
  std::vector<std::string> rows;
  PlotSeries ps{"max |endpoint - oracle|", {}, {}};
  bool pass = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    pass = pass && e.max_abs_diff <= tol;
    results.push_back({{"combinator", e.combinator}, {"max_abs_diff", e.max_abs_diff},
                       {"trials", e.trials}});
    rows.push_back(e.combinator + "," + fmt(e.max_abs_diff) + "," + std::to_string(e.trials));
    // Exact agreement cannot be drawn on a log axis; plot it at 1e-17.
    ps.x.push_back(static_cast<double>(i));
    ps.y.push_back(std::max(e.max_abs_diff, 1e-17));
    std::cout << e.combinator << " " << e.max_abs_diff << "\n";
  }
  run.write_csv("combinator,max_abs_diff,trials", rows);
  run.write_svg({ps}, {"Combinator endpoints vs oracles", "combinator index", "max abs diff",
                       true, ""});
  run.write_json({{"checks", results}, {"tolerance", tol}, {"pass", pass}});
  return verdict(pass, "every combinator within 1e-12 of its oracle");
}

// ---------------------------------------------------------------------------

json linear_config_json(const LinearConfig& c) {
  return {{"n", c.n},
          {"train_size", c.train_size},
          {"val_size", c.val_size},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"lr", c.lr},
          {"lr_final_fraction", c.lr_final_fraction},
          {"lambda", c.lambda},
          {"steps", c.steps},
          {"c_max", c.c_max},
          {"scheme", scheme_name(c.scheme)},
          {"widths", c.widths},
          {"ff_widths", c.ff_widths}};
}

int train_linear_cmd(LinearConfig cfg, const std::string& scheme, const std::string& checkpoint,
                     const fs::path& out) {
  cfg.scheme = scheme_or_usage(scheme);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Run run("train-linear", out, linear_config_json(cfg));
  MrnnParams trained;
  const LinearReport rep = train_linear(cfg, log_epoch, &trained);
  if (!checkpoint.empty()) save_checkpoint(checkpoint, trained);

  const double s = rep.sann.final_val_metric;
  const double b = rep.baseline.final_val_metric;
  const bool abs_ok = s <= 0.3;
  const bool rel_ok = s <= 2.0 * b;
  const bool gain_ok = rep.sann.initial_val_metric >= 5.0 * s;
  run.write_csv("model,epoch,train_loss,val_residual", curve_rows({&rep.sann, &rep.baseline}));
  run.write_svg({val_curve(rep.sann), val_curve(rep.baseline)},
                {"Linear systems: validation residual", "epoch", "mean ||Xy - g||", true, ""});
  run.write_json({{"sann", report_json(rep.sann)},
                  {"baseline", report_json(rep.baseline)},
                  {"checks",
                   {{"sann_residual_le_0.3", abs_ok},
                    {"sann_le_2x_baseline", rel_ok},
                    {"improvement_ge_5x", gain_ok}}}});
  std::cout << "sann " << s << " (untrained " << rep.sann.initial_val_metric << ", "
            << rep.sann.wall_seconds << " s), baseline " << b << " (" << rep.baseline.wall_seconds
            << " s)\n";
  return verdict(abs_ok && rel_ok && gain_ok,
                 "sann residual <= 0.3, <= 2x baseline, >= 5x better than untrained");
}

json eit_config_json(const EitConfig& c) {
  return {{"grid_n", c.grid_n},
          {"train_size", c.train_size},
          {"val_size", c.val_size},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"lr", c.lr},
          {"lr_final_fraction", c.lr_final_fraction},
          {"lambda", c.lambda},
          {"steps", c.steps},
          {"c_max", c.c_max},
          {"scheme", scheme_name(c.scheme)},
          {"noise_level", c.noise_level},
          {"widths", c.widths},
          {"ff_widths", c.ff_widths},
          {"oracle_trials", c.oracle_trials}};
}

int train_eit_cmd(EitConfig cfg, const std::string& scheme, const std::string& checkpoint,
                  bool write_dataset, const fs::path& out) {
  cfg.scheme = scheme_or_usage(scheme);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Run run("train-eit", out, eit_config_json(cfg));
  if (write_dataset) {
    const EitData data = make_eit_data(cfg);
    std::ofstream os(run.dir() / "train-eit-val-dataset.csv", std::ios::binary);
    os << "# sann_cli " << kVersion << " train-eit\n# config: " << eit_config_json(cfg).dump()
       << "\n";
    write_eit_csv(os, data.net, data.val);
  }
  MrnnParams trained;
  const EitReport rep = train_eit(cfg, log_epoch, &trained);
  if (!checkpoint.empty()) save_checkpoint(checkpoint, trained);

  const bool clean_ok = rep.sann.final_val_metric <= 0.06;
  const bool noisy_ok = rep.sann_noisy <= 0.07;
  const bool oracle_ok = rep.oracle_success_rate >= 0.95;
  run.write_csv("model,epoch,train_loss,val_relative_error",
                curve_rows({&rep.sann, &rep.baseline}));
  run.write_svg({val_curve(rep.sann), val_curve(rep.baseline)},
                {"Network EIT: validation relative error", "epoch", "mean relative error", true,
                 ""});
  run.write_json({{"sann", report_json(rep.sann)},
                  {"baseline", report_json(rep.baseline)},
                  {"sann_noisy", rep.sann_noisy},
                  {"baseline_noisy", rep.baseline_noisy},
                  {"gauss_newton",
                   {{"mean_relative_error_noiseless", rep.oracle_noiseless},
                    {"mean_relative_error_noisy", rep.oracle_noisy},
                    {"success_rate", rep.oracle_success_rate}}},
                  {"checks",
                   {{"sann_noiseless_le_0.06", clean_ok},
                    {"sann_noisy_le_0.07", noisy_ok},
                    {"oracle_success_ge_0.95", oracle_ok}}}});
  std::cout << "sann " << rep.sann.final_val_metric << " / " << rep.sann_noisy << " noisy ("
            << rep.sann.parameter_count << " params), baseline " << rep.baseline.final_val_metric
            << " / " << rep.baseline_noisy << " (" << rep.baseline.parameter_count
            << " params), gauss-newton " << rep.oracle_noiseless << " / " << rep.oracle_noisy
            << "\n";
  return verdict(clean_ok && noisy_ok && oracle_ok,
                 "sann rel error <= 0.06 clean and <= 0.07 noisy; oracle >= 95% exact");
}

// ---------------------------------------------------------------------------

struct TransformerOpts {
  TransformerDims dims;
  std::size_t tokens = 6;
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
};

int transformer_demo(const TransformerOpts& o, const fs::path& out) {
  if (o.dims.d_in < 1 || o.dims.d_head < 1 || o.dims.k < 1 || o.tokens < 1)
    throw UsageError("transformer dimensions must be >= 1");
  const Run run("transformer-demo", out,
                {{"d_in", o.dims.d_in}, {"d_head", o.dims.d_head}, {"k", o.dims.k},
                 {"heads", o.dims.heads}, {"tokens", o.tokens}, {"draws", o.draws},
                 {"seed", o.seed}});
  std::vector<std::string> rows;
  PlotSeries sx{"saxp", {}, {}}, ex{"exp", {}, {}};
  for (int i = -60; i <= 40; ++i) {
    const double x = 0.05 * i;
    rows.push_back(fmt(x) + "," + fmt(saxp(x)) + "," + fmt(std::exp(x)));
    sx.x.push_back(x);
    sx.y.push_back(saxp(x));
    ex.x.push_back(x);
    ex.y.push_back(std::exp(x));
  }

  bool positive = true, monotone = true;
  double prev = 0.0;
  for (int i = -20000; i <= 20000; ++i) {
    const double v = saxp(0.005 * i);
    positive = positive && v > 0.0;
    if (i > -20000) monotone = monotone && v > prev;
    prev = v;
  }

  Rng rng(o.seed);
  double worst_row_sum = 0.0;
  double worst_sargmax_vs_softmax = 0.0;
  std::size_t finite_blocks = 0;
  for (std::size_t d = 0; d < o.draws; ++d) {
    Matrix m(o.tokens, o.tokens);
    for (double& v : m.data()) v = rng.uniform(-3.0, 3.0);
    const Matrix a = sargmax(m);
    const Matrix sm = softmax(m);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double sum = 0.0;
      for (double v : a.row(i)) sum += v;
      worst_row_sum = std::max(worst_row_sum, std::abs(sum - 1.0));
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      worst_sargmax_vs_softmax = std::max(worst_sargmax_vs_softmax, std::abs(a.data()[i] - sm.data()[i]));

    const TransformerBlockParams p = random_block(o.dims, rng);
    Matrix x(o.dims.d_in, o.tokens);
    for (double& v : x.data()) v = rng.normal();
    if (all_finite(transformer_block(p, x).data())) ++finite_blocks;
  }
  const bool pass = saxp(0.0) == 1.0 && positive && monotone && worst_row_sum <= 1e-12 &&
                    finite_blocks == o.draws;
  run.write_csv("x,saxp,exp", rows);
  run.write_svg({sx, ex}, {"saxp vs exp", "x", "value", false, ""});
  run.write_json({{"saxp_at_zero", saxp(0.0)},
                  {"saxp_positive_on_sweep", positive},
                  {"saxp_monotone_on_sweep", monotone},
                  {"max_sargmax_row_sum_error", worst_row_sum},
                  {"max_abs_sargmax_minus_softmax", worst_sargmax_vs_softmax},
                  {"finite_blocks", finite_blocks},
                  {"pass", pass}});
  return verdict(pass, "saxp and block properties hold");
}

// ---------------------------------------------------------------------------

int gradcheck_cmd(const GradCheckOptions& o, const fs::path& out) {
  if (o.trials < 1) throw UsageError("trials must be >= 1");
  if (!(o.kink_margin >= 0.0) || !(o.step > 0.0)) throw UsageError("kink_margin >= 0 and step > 0 required");
  const Run run("gradcheck", out, {{"trials", o.trials}, {"seed", o.seed},
                                   {"kink_margin", o.kink_margin}, {"step", o.step}});
  const auto entries = run_gradcheck(o);
  const double tol = 1e-4;
  double worst = 0.0;
  json results = json::array();
  std::vector<std::string> rows;
  PlotSeries ps{"max relative error", {}, {}};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    worst = std::max(worst, e.max_rel_error);
    results.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error},
                       {"trials", e.trials}, {"redraws", e.redraws}});
    rows.push_back(e.name + "," + fmt(e.max_rel_error) + "," + std::to_string(e.trials) + "," +
                   std::to_string(e.redraws));
    ps.x.push_back(static_cast<double>(i));
    ps.y.push_back(std::max(e.max_rel_error, 1e-17));
    std::cout << e.name << " " << e.max_rel_error << "\n";
  }
  run.write_csv("name,max_rel_error,trials,redraws", rows);
  run.write_svg({ps}, {"Finite-difference gradient check", "check index", "max rel error", true,
                       ""});
  run.write_json({{"checks", results}, {"max_rel_error", worst}, {"tolerance", tol},
                  {"pass", worst <= tol}});
  std::cout << "max rel error " << worst << "\n";
  return verdict(worst <= tol, "every gradient within 1e-4 of finite differences");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semialgebraic neural network experiments"};
  app.set_version_flag("--version", std::string("sann_cli ") + kVersion);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "key = value config file; [command] sections set per-command keys");
  app.require_subcommand(1);

  std::string out_dir = "sann_out";
  app.add_option("--out-dir", out_dir, "Output directory")->envname("SANN_OUT_DIR");

  JacobiOpts jac;
  auto* jc = app.add_subcommand("jacobi-demo", "Jacobi iteration as a SANN vector field");
  jc->add_option("--n", jac.n, "system size");
  jc->add_option("--steps", jac.steps, "Euler steps");
  jc->add_option("--systems", jac.systems, "random systems");
  jc->add_option("--seed", jac.seed);

  GridOpts hv;
  auto* hc = app.add_subcommand("heaviside-demo", "Exact Heaviside step");
  hc->add_option("--points", hv.points);
  hc->add_option("--range", hv.range);
  hc->add_option("--steps", hv.steps, "use a power of two for exact outputs");

  GridOpts cf;
  auto* cc = app.add_subcommand("charfn-demo", "Characteristic function of {g > 0}");
  cc->add_option("--points", cf.points);
  cc->add_option("--range", cf.range);
  cc->add_option("--steps", cf.steps, "use a power of two for exact outputs");

  TraceOpts tr;
  auto* tc = app.add_subcommand("trace-sqrt", "Arc-length homotopy trace to sqrt(x)");
  tc->add_option("--x", tr.xs, "targets")->delimiter(',');
  tc->add_option("--steps", tr.steps);
  tc->add_option("--start", tr.start, "root at t = 0");

  GlueCheckOptions gl;
  auto* gc = app.add_subcommand("glue-check", "Combinators against their oracles");
  gc->add_option("--trials", gl.trials);
  gc->add_option("--seed", gl.seed);
  gc->add_option("--steps", gl.steps);

  LinearConfig lin;
  std::string lin_scheme = "euler", lin_ckpt;
  auto* lc = app.add_subcommand("train-linear", "Train SANN and baseline on linear systems");
  lc->add_option("--n", lin.n);
  lc->add_option("--train-size", lin.train_size);
  lc->add_option("--val-size", lin.val_size);
  lc->add_option("--epochs", lin.epochs);
  lc->add_option("--batch-size", lin.batch_size);
  lc->add_option("--seed", lin.seed);
  lc->add_option("--lr", lin.lr);
  lc->add_option("--lr-final-fraction", lin.lr_final_fraction);
  lc->add_option("--lambda", lin.lambda, "direction loss weight");
  lc->add_option("--steps", lin.steps);
  lc->add_option("--c-max", lin.c_max);
  lc->add_option("--scheme", lin_scheme, "euler or rk4");
  lc->add_option("--widths", lin.widths, "MRNN hidden widths")->delimiter(',');
  lc->add_option("--ff-widths", lin.ff_widths, "baseline hidden widths")->delimiter(',');
  lc->add_option("--checkpoint", lin_ckpt, "save the trained SANN here");

  EitConfig eit;
  std::string eit_scheme = "euler", eit_ckpt;
  bool eit_dataset = false;
  auto* ec = app.add_subcommand("train-eit", "Train SANN and baseline on network EIT");
  ec->add_option("--grid-n", eit.grid_n);
  ec->add_option("--train-size", eit.train_size);
  ec->add_option("--val-size", eit.val_size);
  ec->add_option("--epochs", eit.epochs);
  ec->add_option("--batch-size", eit.batch_size);
  ec->add_option("--seed", eit.seed);
  ec->add_option("--lr", eit.lr);
  ec->add_option("--lr-final-fraction", eit.lr_final_fraction);
  ec->add_option("--lambda", eit.lambda, "direction loss weight");
  ec->add_option("--steps", eit.steps);
  ec->add_option("--c-max", eit.c_max);
  ec->add_option("--scheme", eit_scheme, "euler or rk4");
  ec->add_option("--noise-level", eit.noise_level);
  ec->add_option("--widths", eit.widths, "MRNN hidden widths")->delimiter(',');
  ec->add_option("--ff-widths", eit.ff_widths, "baseline hidden widths")->delimiter(',');
  ec->add_option("--oracle-trials", eit.oracle_trials);
  ec->add_option("--checkpoint", eit_ckpt, "save the trained SANN here");
  ec->add_flag("--write-dataset", eit_dataset, "also write the validation set as CSV");

  TransformerOpts tf;
  auto* fc = app.add_subcommand("transformer-demo", "Semialgebraic transformer block");
  fc->add_option("--d-in", tf.dims.d_in);
  fc->add_option("--d-head", tf.dims.d_head);
  fc->add_option("--k", tf.dims.k);
  fc->add_option("--heads", tf.dims.heads);
  fc->add_option("--tokens", tf.tokens);
  fc->add_option("--draws", tf.draws);
  fc->add_option("--seed", tf.seed);

  GradCheckOptions gr;
  auto* rc = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  rc->add_option("--trials", gr.trials);
  rc->add_option("--seed", gr.seed);
  rc->add_option("--kink-margin", gr.kink_margin);
  rc->add_option("--step", gr.step);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  const fs::path out = out_dir;
  try {
    if (*jc) return jacobi_demo(jac, out);
    if (*hc) return heaviside_demo(hv, out);
    if (*cc) return charfn_demo(cf, out);
    if (*tc) return trace_sqrt(tr, out);
    if (*gc) return glue_check(gl, out);
    if (*lc) return train_linear_cmd(lin, lin_scheme, lin_ckpt, out);
    if (*ec) return train_eit_cmd(eit, eit_scheme, eit_ckpt, eit_dataset, out);
    if (*fc) return transformer_demo(tf, out);
    if (*rc) return gradcheck_cmd(gr, out);
  } catch (const UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "training diverged at epoch " << e.epoch() << ", batch " << e.batch() << ": "
              << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
