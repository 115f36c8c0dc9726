#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hisd/config.hpp"
#include "hisd/dynamics.hpp"
#include "hisd/spectral.hpp"

namespace hisd {

struct RunOutcome {
  RunConfig config;
  SaddleState state;
  RunReport report;
  Spectrum spectrum;
  std::optional<MorseIndex> morse;
  double max_gram_drift = 0.0;
  double max_cross_ortho = 0.0;
  double max_half_step_defect = 0.0;
  double max_grad_sum = 0.0;
  double wall_time = 0.0;
};

/// Runs one configuration to T and evaluates the spectrum of the final state
/// (output.spectrum_count eigenpairs, widened until the Morse index is resolved).
RunOutcome execute_run(const RunConfig& config, const StepObserver& observer = {});

/// Writes u.txt / v<i>.txt, diagnostics.csv, spectrum.csv, summary.json and
/// timing.json into `directory` (created if needed).
void emit_outputs(const RunOutcome& outcome, const std::string& directory);

/// Plain-text node table of a field: header lines start with '#', then
/// "x [y] value" per mesh node, boundary nodes included.
void write_field(const std::string& path, const FemSpace& space, const Vector& u, const std::string& name);

/// %.17g formatting.
std::string format_double(double x);

}  // namespace hisd
