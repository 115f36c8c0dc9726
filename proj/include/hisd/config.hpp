#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hisd/dynamics.hpp"
#include "hisd/fem.hpp"
#include "hisd/problem.hpp"

namespace hisd {

/// A named entry of the coefficient / initial-data registry with its parameters.
/// Scalar parameters are stored as one-element lists.
struct Selector {
  std::string type;
  std::map<std::string, std::vector<double>> params;

  double scalar(const std::string& name) const;
  const std::vector<double>& list(const std::string& name) const;
  bool operator==(const Selector&) const = default;
};

Selector make_selector(std::string type, std::map<std::string, std::vector<double>> params = {});

struct OutputConfig {
  std::string directory = "out";
  bool fields = true;
  /// Every n-th step is written to diagnostics.csv; 1 writes all N rows.
  int diagnostics_every = 1;
  int spectrum_count = 6;
  ResidualForm residual_form = ResidualForm::weak_lumped;
  bool operator==(const OutputConfig&) const = default;
};

struct LandscapeConfig {
  /// Initial-data selector of the root solution; the root is taken as-is when it
  /// is already stationary (residual below residual_tol), otherwise it is first
  /// relaxed with a run of index root_index.
  Selector root = {"zero", {}};
  int root_index = -1;
  double epsilon = 0.1;
  double dedup_tol = 1e-2;
  double residual_tol = 1e-3;
  /// Child runs stop early once the residual is below this value (0 disables).
  double stop_residual = 0.0;
  /// Finish each child endpoint with Newton on the stationarity equation.
  bool newton_refine = false;
  int spectrum_count = 12;
  int max_runs = 400;
  bool upward = true;
  int max_index = -1;
  unsigned seed = 1;
  /// Relative amplitude of seeded noise added to child initial states (0 disables).
  double noise = 0.0;
  VSolver v_solver = VSolver::automatic;
  bool operator==(const LandscapeConfig&) const = default;
};

struct ConvergenceLevel {
  double tau = 0.0;
  std::vector<int> cells;
  bool operator==(const ConvergenceLevel&) const = default;
};

struct ConvergenceConfig {
  /// "tau" or "h": the quantity the rates are reported against.
  std::string variable = "tau";
  std::vector<ConvergenceLevel> levels;
  ConvergenceLevel reference;
  bool operator==(const ConvergenceConfig&) const = default;
};

struct RunConfig {
  std::string name = "run";
  int dim = 1;
  std::vector<double> extents;
  std::vector<int> cells;
  double tau = 1e-3;
  double T = 5.0;
  Selector diffusion = {"constant", {{"value", {1.0}}}};
  Selector advection = {"zero", {}};
  Selector reaction = {"zero", {}};
  Selector nonlinearity = {"polynomial", {{"coefficients", {0.0}}}};
  SchemeParams scheme;
  Selector u0 = {"zero", {}};
  std::vector<Selector> v0;
  OutputConfig output;
  std::optional<LandscapeConfig> landscape;
  std::optional<ConvergenceConfig> convergence;

  /// Throws on unknown selectors, missing parameters or inconsistent sizes.
  void validate() const;
  bool operator==(const RunConfig& other) const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string emit_config(const RunConfig& config);

Mesh build_config_mesh(const RunConfig& config);
Mesh build_config_mesh(const RunConfig& config, const std::vector<int>& cells);
Problem build_problem(const RunConfig& config);
AnalyticFunction build_initial(const RunConfig& config, const Selector& selector);
SchemeParams build_scheme(const RunConfig& config);
/// scheme.tau / scheme.T overridden by the discretization block; k taken from the directors.
SaddleState build_initial_state(const FemSpace& space, const Problem& problem, const RunConfig& config);

std::vector<std::string> preset_names();
/// Configurations of a preset; npo-comparison yields two.
std::vector<RunConfig> preset(const std::string& name);

}  // namespace hisd
