#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hisd/config.hpp"

namespace hisd {

struct ConvergenceRow {
  double tau = 0.0;
  double h = 0.0;
  int steps = 0;
  double err_u = 0.0;
  std::vector<double> err_v;
  /// Empty for the first row.
  std::optional<double> rate_u;
  std::vector<std::optional<double>> rate_v;
};

struct ConvergenceReport {
  std::string variable;
  std::vector<ConvergenceRow> rows;
  /// Least-squares slopes of log Err against log(tau) or log(h).
  double slope_u = 0.0;
  std::vector<double> slope_v;
  ConvergenceLevel reference;
  int reference_steps = 0;
};

/// log(e_coarse / e_fine) / log(p_coarse / p_fine); log2 of the error ratio for dyadic levels.
double observed_rate(double p_coarse, double e_coarse, double p_fine, double e_fine);
/// Least-squares slope of log(errors) against log(params).
double fitted_slope(const std::vector<double>& params, const std::vector<double>& errors);

using ConvergenceProgress = std::function<void(int reference_step, int reference_total)>;

/// Advances the reference run and every level together. Errors are
/// max over coarse time levels of the L2 distance on the reference mesh, with
/// coarse fields interpolated there. Each level runs floor(T / tau) steps; its
/// step must be an integer multiple of the reference step and its mesh nested
/// in the reference mesh.
ConvergenceReport convergence_study(const RunConfig& config, const ConvergenceProgress& progress = {});

void write_convergence(const ConvergenceReport& report, const RunConfig& config, const std::string& directory);

}  // namespace hisd
