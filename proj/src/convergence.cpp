#include "hisd/convergence.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "hisd/experiment.hpp"

namespace hisd {

namespace fs = std::filesystem;
using nlohmann::json;

double observed_rate(double p_coarse, double e_coarse, double p_fine, double e_fine) {
  return std::log(e_coarse / e_fine) / std::log(p_coarse / p_fine);
}

double fitted_slope(const std::vector<double>& params, const std::vector<double>& errors) {
  if (params.size() != errors.size() || params.size() < 2) throw Error("fitted_slope: need two or more points");
  const double n = static_cast<double>(params.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x = std::log(params[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw Error("fitted_slope: parameters do not vary");
  return (n * sxy - sx * sy) / den;
}

namespace {

int steps_for(double T, double tau) { return static_cast<int>(std::floor(T / tau + 1e-9)); }

struct Level {
  ConvergenceLevel spec;
  std::unique_ptr<FemSpace> space;
  std::unique_ptr<Stepper> stepper;
  int ratio = 1;
  int steps = 0;
  double err_u = 0.0;
  std::vector<double> err_v;
};

void accumulate(Level& level, const FemSpace& ref_space, const SaddleState& ref, const SaddleState& coarse) {
  const Vector du = ref.u - transfer(*level.space, coarse.u, ref_space);
  level.err_u = std::max(level.err_u, l2_norm(ref_space, du));
  for (std::size_t i = 0; i < ref.v.size(); ++i) {
    const Vector dv = ref.v[i] - transfer(*level.space, coarse.v[i], ref_space);
    level.err_v[i] = std::max(level.err_v[i], l2_norm(ref_space, dv));
  }
}

}  // namespace

ConvergenceReport convergence_study(const RunConfig& config, const ConvergenceProgress& progress) {
  config.validate();
  if (!config.convergence) throw Error("convergence_study: config has no 'convergence' block");
  const ConvergenceConfig& cc = *config.convergence;
  const Problem problem = build_problem(config);
  const int k = config.scheme.k;

  const FemSpace ref_space(build_config_mesh(config, cc.reference.cells));
  SchemeParams ref_params = build_scheme(config);
  const int ref_steps = steps_for(config.T, cc.reference.tau);
  ref_params.tau = cc.reference.tau;
  ref_params.T = ref_steps * cc.reference.tau;
  ref_params.validate();
  Stepper reference(ref_space, problem, ref_params, build_initial_state(ref_space, problem, config),
                    config.output.residual_form);

  std::vector<Level> levels;
  for (const auto& spec : cc.levels) {
    Level level;
    level.spec = spec;
    level.space = std::make_unique<FemSpace>(build_config_mesh(config, spec.cells));
    if (!is_nested(*level.space, ref_space))
      throw Error("convergence_study: level mesh is not nested in the reference mesh");
    const double ratio = spec.tau / cc.reference.tau;
    level.ratio = static_cast<int>(std::lround(ratio));
    if (level.ratio < 1 || std::abs(ratio - level.ratio) > 1e-9 * ratio)
      throw Error("convergence_study: level step " + format_double(spec.tau) +
                  " is not an integer multiple of the reference step");
    level.steps = steps_for(config.T, spec.tau);
    SchemeParams p = build_scheme(config);
    p.tau = spec.tau;
    p.T = level.steps * spec.tau;
    p.validate();
    level.stepper = std::make_unique<Stepper>(*level.space, problem, p,
                                              build_initial_state(*level.space, problem, config),
                                              config.output.residual_form);
    level.err_v.assign(k, 0.0);
    accumulate(level, ref_space, reference.state(), level.stepper->state());
    levels.push_back(std::move(level));
  }

  for (int n = 1; n <= ref_steps; ++n) {
    reference.step();
    for (auto& level : levels) {
      if (n % level.ratio != 0 || n / level.ratio > level.steps) continue;
      level.stepper->step();
      accumulate(level, ref_space, reference.state(), level.stepper->state());
    }
    if (progress) progress(n, ref_steps);
  }

  ConvergenceReport report;
  report.variable = cc.variable;
  report.reference = cc.reference;
  report.reference_steps = ref_steps;
  std::vector<double> params;
  std::vector<double> eu;
  std::vector<std::vector<double>> ev(k);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const Level& level = levels[l];
    ConvergenceRow row;
    row.tau = level.spec.tau;
    row.h = level.space->mesh().mesh_size();
    row.steps = level.steps;
    row.err_u = level.err_u;
    row.err_v = level.err_v;
    row.rate_v.assign(k, std::nullopt);
    const double p = cc.variable == "tau" ? row.tau : row.h;
    if (l > 0) {
      const ConvergenceRow& prev = report.rows.back();
      const double pp = cc.variable == "tau" ? prev.tau : prev.h;
      row.rate_u = observed_rate(pp, prev.err_u, p, row.err_u);
      for (int i = 0; i < k; ++i) row.rate_v[i] = observed_rate(pp, prev.err_v[i], p, row.err_v[i]);
    }
    params.push_back(p);
    eu.push_back(row.err_u);
    for (int i = 0; i < k; ++i) ev[i].push_back(row.err_v[i]);
    report.rows.push_back(std::move(row));
  }
  report.slope_u = fitted_slope(params, eu);
  for (int i = 0; i < k; ++i) report.slope_v.push_back(fitted_slope(params, ev[i]));
  return report;
}

void write_convergence(const ConvergenceReport& report, const RunConfig& config, const std::string& directory) {
  fs::create_directories(directory);
  const std::size_t k = report.slope_v.size();
  {
    std::ofstream f(fs::path(directory) / "convergence.csv");
    if (!f) throw Error("cannot write convergence.csv in '" + directory + "'");
    f << "tau,h,steps,err_u,rate_u";
    for (std::size_t i = 0; i < k; ++i) f << ",err_v" << i + 1 << ",rate_v" << i + 1;
    f << '\n';
    auto opt = [](const std::optional<double>& r) { return r ? format_double(*r) : std::string(); };
    for (const auto& row : report.rows) {
      f << format_double(row.tau) << ',' << format_double(row.h) << ',' << row.steps << ','
        << format_double(row.err_u) << ',' << opt(row.rate_u);
      for (std::size_t i = 0; i < k; ++i) f << ',' << format_double(row.err_v[i]) << ',' << opt(row.rate_v[i]);
      f << '\n';
    }
  }
  json j;
  j["config"] = json::parse(emit_config(config));
  j["variable"] = report.variable;
  j["reference"] = {{"tau", report.reference.tau}, {"cells", report.reference.cells}, {"steps", report.reference_steps}};
  j["slope_u"] = report.slope_u;
  j["slope_v"] = report.slope_v;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r = {{"tau", row.tau}, {"h", row.h}, {"steps", row.steps}, {"err_u", row.err_u}, {"err_v", row.err_v}};
    r["rate_u"] = row.rate_u ? json(*row.rate_u) : json(nullptr);
    json rv = json::array();
    for (const auto& x : row.rate_v) rv.push_back(x ? json(*x) : json(nullptr));
    r["rate_v"] = rv;
    rows.push_back(r);
  }
  j["rows"] = rows;
  std::ofstream f(fs::path(directory) / "convergence.json");
  if (!f) throw Error("cannot write convergence.json in '" + directory + "'");
  f << j.dump(2) << '\n';
}

}  // namespace hisd
