#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hisd/fem.hpp"
#include "hisd/linalg.hpp"
#include "hisd/problem.hpp"

namespace hisd {

/// How the implicit director relation is solved inside a step. Every mode is a
/// fixed-point iteration on the same relation; they differ only in the matrix
/// used to invert the linear part.
enum class VSolver {
  /// Shared first; switches to `factored` for a director whose iteration contracts slowly.
  automatic,
  /// Sparse LU of the frozen-scalar system at every Picard iteration.
  direct,
  /// Sparse LU of the frozen-scalar system once per director and step; later
  /// iterations correct for the drift of the frozen scalars.
  factored,
  /// Run-constant Cholesky of 2/(gamma tau) M + A; f', advection and shift terms lagged.
  shared,
};

const char* to_string(VSolver mode);
VSolver vsolver_from_string(const std::string& name);

/// Evaluation of the director scale factor. Both agree whenever the directors
/// are orthonormal, so they define the same discrete solution in exact
/// arithmetic. Off the constraint they differ: with `half_norm` a norm defect
/// of one director is neutral and is amplified through the coupling terms
/// (exponentially once k >= 2 and V^T K V is not diagonal), while `increment`
/// damps it at rate 2 gamma |(K v_i, v_i)|.
enum class ScaleForm {
  /// 1 - |v^n - v^{n-1}|^2 / 4.
  increment,
  /// (v^{n-1/2}, v^{n-1/2}).
  half_norm,
};

const char* to_string(ScaleForm form);
ScaleForm scale_form_from_string(const std::string& name);

struct SchemeParams {
  int k = 1;
  double beta = 1.0;
  double gamma = 1.0;
  double tau = 1e-3;
  double T = 5.0;
  double picard_tol = 1e-12;
  int picard_max = 50;
  double guard_eps = 1e-8;
  /// Keep iterating past picard_tol while the increment still halves.
  bool polish = true;
  /// Newton on the full director relation when the Picard iteration stalls.
  bool newton_fallback = true;
  /// false drops the (v^{n-1/2}, v^{n-1/2}) factors (non-orthonormal variant).
  bool orthonormal_terms = true;
  ScaleForm scale_form = ScaleForm::increment;
  VSolver v_solver = VSolver::direct;

  /// Throws unless the parameters are admissible and T / tau is an integer.
  void validate() const;
  int num_steps() const;
};

struct SaddleState {
  Vector u;
  std::vector<Vector> v;
  int n = 0;
  double t = 0.0;
};

/// Time-independent matrices and factorizations of one run.
struct Operators {
  SparseMatrix mass;
  SparseMatrix stiffness;
  /// Advection-reaction matrix G; zero matrix when the problem has neither term.
  SparseMatrix advection_reaction;
  bool has_advection_reaction = false;
  /// (beta tau)^{-1} M + A.
  Factorization u_matrix;
  /// 2 (gamma tau)^{-1} M + A.
  Factorization v_shared;
};

Operators assemble_operators(const FemSpace& space, const Problem& problem, const SchemeParams& params);

class StepFailure : public Error {
 public:
  StepFailure(int step, const std::string& what) : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct StepDiagnostics {
  int step = 0;
  double time = 0.0;
  /// max |(v_i^n, v_j^n) - delta_ij|.
  double gram_drift = 0.0;
  /// max_{p<q} |(v_p^n, v_q^{n-1})|.
  double cross_ortho = 0.0;
  /// max_i |(v^{n-1/2}, v^{n-1/2}) - (1 - |v^n - v^{n-1}|^2 / 4)|.
  double half_step_defect = 0.0;
  std::vector<double> guard_values;
  std::vector<double> guard_margins;
  double guard_min = 0.0;
  std::vector<int> picard_iterations;
  double grad_u = 0.0;
  std::vector<double> grad_v;
  double grad_sum = 0.0;
  double residual_inf = 0.0;
};

struct RunReport {
  std::vector<StepDiagnostics> steps;
  std::vector<std::string> warnings;
  Vector final_residual;
  double final_residual_inf = 0.0;
};

struct RunResult {
  SaddleState state;
  RunReport report;
};

/// Modified Gram-Schmidt in the discrete L2 inner product, applied twice.
/// Throws naming the offending index when a pivot norm falls below 1e-8.
std::vector<Vector> orthonormalize(const FemSpace& space, std::vector<Vector> vectors);

/// u = P u0, v = orthonormalized P v0.
SaddleState initialize(const FemSpace& space, const Problem& problem, const AnalyticFunction& u0,
                       const std::vector<AnalyticFunction>& v0);
/// Same as initialize() for data that already lives in the space.
SaddleState initialize_from_fields(const FemSpace& space, Vector u0, std::vector<Vector> v0);

/// Load of the explicit u-equation: (f(u_h), phi_i) plus G u for the advective model.
Vector explicit_load(const FemSpace& space, const Problem& problem, const Operators& ops, const Vector& u);

/// Implicit u-update; solved with the Woodbury identity against the run-constant factorization.
Vector u_step(const FemSpace& space, const Problem& problem, const Operators& ops, const SchemeParams& params,
              const SaddleState& state);

/// K = A - G - W(f'(u)): the linearized operator whose L2 form enters the director relation.
SparseMatrix director_operator(const FemSpace& space, const Problem& problem, const Operators& ops,
                               const Vector& u_new);

struct VStepResult {
  Vector v;
  int iterations = 0;
  /// (v^{n-1/2}, v^{n-1/2}) at the returned iterate.
  double half_norm_sq = 1.0;
  /// (K v^{n-1/2}, v^{n-1/2}) at the returned iterate.
  double sigma = 0.0;
};

/// Implicit update of director i. `updated` holds v_l^n for l < i (it may be longer;
/// only the first i entries are read).
VStepResult v_step(const FemSpace& space, const Operators& ops, const SchemeParams& params,
                   const SparseMatrix& director_op, const SaddleState& previous, const std::vector<Vector>& updated,
                   int i);

struct GuardReport {
  /// s_i = (K v_i^{n-1/2}, v_i^{n-1/2}) / 2.
  std::vector<double> values;
  std::vector<double> margins;
  bool warning = false;
};

/// Non-degeneracy monitor for 1/(tau gamma) != s_i. Diagnostic only.
GuardReport check_guard(const std::vector<Vector>& v_half, const SparseMatrix& director_op,
                        const SchemeParams& params);

enum class ResidualForm {
  /// M_L^{-1} (-A u + G u + (f(u_h), phi)): weak residual of the scheme mapped to nodes.
  weak_lumped,
  /// M_L^{-1} (-A u + G u) + f(u(x_i)).
  nodal,
};

const char* to_string(ResidualForm form);
ResidualForm residual_form_from_string(const std::string& name);

struct Residual {
  Vector values;
  double inf_norm = 0.0;
};

Residual residual_Finf(const FemSpace& space, const Problem& problem, const SparseMatrix& stiffness,
                       const SparseMatrix* advection_reaction, const Vector& u,
                       ResidualForm form = ResidualForm::weak_lumped);

/// Advances one run step by step; the space and problem must outlive it.
class Stepper {
 public:
  Stepper(const FemSpace& space, const Problem& problem, SchemeParams params, SaddleState initial,
          ResidualForm residual_form = ResidualForm::weak_lumped);

  /// u-update, then directors 1..k in order, then diagnostics.
  StepDiagnostics step();

  const SaddleState& state() const { return state_; }
  const Operators& operators() const { return ops_; }
  const SchemeParams& params() const { return params_; }
  int total_steps() const { return total_steps_; }
  bool done() const { return state_.n >= total_steps_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  const FemSpace& space_;
  const Problem& problem_;
  SchemeParams params_;
  Operators ops_;
  SaddleState state_;
  ResidualForm residual_form_;
  int total_steps_ = 0;
  std::vector<std::string> warnings_;
};

using StepObserver = std::function<void(const SaddleState&, const StepDiagnostics&)>;

RunResult run(const FemSpace& space, const Problem& problem, const SchemeParams& params, SaddleState initial,
              ResidualForm residual_form = ResidualForm::weak_lumped, const StepObserver& observer = {});

/// max |(v_i, v_j) - delta_ij|.
double gram_drift(const FemSpace& space, const std::vector<Vector>& v);

}  // namespace hisd
