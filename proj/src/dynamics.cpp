#include "hisd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hisd {

const char* to_string(VSolver mode) {
  switch (mode) {
    case VSolver::automatic: return "auto";
    case VSolver::direct: return "direct";
    case VSolver::factored: return "factored";
    case VSolver::shared: return "shared";
  }
  return "auto";
}

VSolver vsolver_from_string(const std::string& name) {
  if (name == "auto") return VSolver::automatic;
  if (name == "direct") return VSolver::direct;
  if (name == "factored") return VSolver::factored;
  if (name == "shared") return VSolver::shared;
  throw Error("unknown director solver '" + name + "' (expected auto, direct, factored or shared)");
}

const char* to_string(ScaleForm form) { return form == ScaleForm::half_norm ? "half_norm" : "increment"; }

ScaleForm scale_form_from_string(const std::string& name) {
  if (name == "increment") return ScaleForm::increment;
  if (name == "half_norm") return ScaleForm::half_norm;
  throw Error("unknown scale form '" + name + "' (expected increment or half_norm)");
}

const char* to_string(ResidualForm form) { return form == ResidualForm::nodal ? "nodal" : "weak_lumped"; }

ResidualForm residual_form_from_string(const std::string& name) {
  if (name == "weak_lumped") return ResidualForm::weak_lumped;
  if (name == "nodal") return ResidualForm::nodal;
  throw Error("unknown residual form '" + name + "' (expected weak_lumped or nodal)");
}

void SchemeParams::validate() const {
  if (k < 0) throw Error("scheme: k must be non-negative");
  if (!(beta > 0.0) || !(gamma > 0.0) || !(tau > 0.0) || !(T > 0.0))
    throw Error("scheme: beta, gamma, tau and T must be positive");
  if (!(picard_tol > 0.0) || picard_max < 1) throw Error("scheme: picard_tol must be positive and picard_max >= 1");
  const double steps = T / tau;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps) || std::round(steps) < 1.0)
    throw Error("scheme: T / tau must be a positive integer");
}

int SchemeParams::num_steps() const {
  validate();
  return static_cast<int>(std::lround(T / tau));
}

Operators assemble_operators(const FemSpace& space, const Problem& problem, const SchemeParams& params) {
  params.validate();
  check_ellipticity(space, problem);
  Operators ops;
  ops.mass = space.mass();
  ops.stiffness = assemble_stiffness(space, problem.a);
  ops.has_advection_reaction = problem.has_advection_reaction();
  ops.advection_reaction = ops.has_advection_reaction ? assemble_advection_reaction(space, problem.b, problem.c)
                                                      : SparseMatrix(space.pattern());
  const SparseMatrix u_matrix = (1.0 / (params.beta * params.tau)) * ops.mass + ops.stiffness;
  ops.u_matrix = factor_spd(u_matrix);
  const SparseMatrix v_matrix = (2.0 / (params.gamma * params.tau)) * ops.mass + ops.stiffness;
  ops.v_shared = factor_spd(v_matrix);
  return ops;
}

double gram_drift(const FemSpace& space, const std::vector<Vector>& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vector mv = space.mass() * v[i];
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = v[j].dot(mv) - (i == j ? 1.0 : 0.0);
      worst = std::max(worst, std::abs(g));
    }
  }
  return worst;
}

std::vector<Vector> orthonormalize(const FemSpace& space, std::vector<Vector> vectors) {
  const SparseMatrix& m = space.mass();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    space.check_conforming(vectors[i], "orthonormalize");
    const double original = std::sqrt(std::max(0.0, vectors[i].dot(m * vectors[i])));
    // Two passes keep the Gram matrix at identity to rounding level.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) vectors[i] -= vectors[j].dot(m * vectors[i]) * vectors[j];
    }
    const double norm = std::sqrt(std::max(0.0, vectors[i].dot(m * vectors[i])));
    if (!(norm >= 1e-8) || !(norm >= 1e-8 * original))
      throw Error("orthonormalize: director " + std::to_string(i + 1) +
                  " is linearly dependent on the previous ones (pivot norm " + std::to_string(norm) + ")");
    vectors[i] /= norm;
  }
  return vectors;
}

SaddleState initialize(const FemSpace& space, const Problem& problem, const AnalyticFunction& u0,
                       const std::vector<AnalyticFunction>& v0) {
  Vector u = elliptic_projection(space, u0, problem.a);
  std::vector<Vector> v;
  v.reserve(v0.size());
  for (const auto& g : v0) v.push_back(elliptic_projection(space, g, problem.a));
  return initialize_from_fields(space, std::move(u), std::move(v));
}

SaddleState initialize_from_fields(const FemSpace& space, Vector u0, std::vector<Vector> v0) {
  space.check_conforming(u0, "initialize");
  SaddleState state;
  state.u = std::move(u0);
  state.v = orthonormalize(space, std::move(v0));
  return state;
}

Vector explicit_load(const FemSpace& space, const Problem& problem, const Operators& ops, const Vector& u) {
  Vector load = assemble_nonlinear_load(space, u, problem.f);
  if (ops.has_advection_reaction) load += ops.advection_reaction * u;
  return load;
}

Vector u_step(const FemSpace& space, const Problem& problem, const Operators& ops, const SchemeParams& params,
              const SaddleState& state) {
  const int n = space.num_dofs();
  const int k = static_cast<int>(state.v.size());
  const Vector load = explicit_load(space, problem, ops, state.u);
  Vector rhs = (1.0 / (params.beta * params.tau)) * (ops.mass * state.u) + load;
  DenseMatrix u_cols(n, k);
  DenseMatrix w_cols(n, k);
  for (int i = 0; i < k; ++i) {
    const Vector mv = ops.mass * state.v[i];
    rhs -= 2.0 * state.v[i].dot(load) * mv;
    u_cols.col(i) = 2.0 * mv;
    w_cols.col(i) = ops.stiffness * state.v[i];
  }
  Vector u_new = woodbury_solve(ops.u_matrix, u_cols, w_cols, rhs);
  if (!u_new.allFinite()) throw NonFiniteError("u_step: non-finite solution");
  return u_new;
}

SparseMatrix director_operator(const FemSpace& space, const Problem& problem, const Operators& ops,
                               const Vector& u_new) {
  SparseMatrix k = ops.stiffness - assemble_weighted_mass(space, u_new, problem.fprime);
  if (ops.has_advection_reaction) k -= ops.advection_reaction;
  return k;
}

namespace {

// Residual of director i's relation,
//   (gamma tau)^{-1} M (x - v_old) + s K h - sigma M h - s sum_l c_l M w_l,
// with h = (x + v_old) / 2, sigma = h^T K h, c_l = w_l^T K h; Newton with the
// sparse part of the Jacobian factored and the rank-(k+1) rest by Woodbury.
std::pair<Vector, int> newton_director(const Operators& ops, const SchemeParams& params, const SparseMatrix& kop,
                                       const Vector& vold, const SaddleState& previous,
                                       const std::vector<Vector>& updated, int i, Vector x) {
  const int k = static_cast<int>(previous.v.size());
  const SparseMatrix& m = ops.mass;
  const double inv_gt = 1.0 / (params.gamma * params.tau);
  std::vector<Vector> mw;
  std::vector<Vector> ktw;
  for (int l = 0; l < k; ++l) {
    if (l == i) continue;
    const Vector& w = l < i ? updated[l] : previous.v[l];
    mw.push_back(m * w);
    ktw.push_back(kop.transpose() * w);
  }
  const int r = static_cast<int>(mw.size()) + 2;

  double previous_step = -1.0;
  for (int it = 1; it <= 30; ++it) {
    const Vector h = 0.5 * (x + vold);
    const Vector kh = kop * h;
    const Vector mh = m * h;
    const double sigma = h.dot(kh);
    double s = 1.0;
    Vector ds = Vector::Zero(x.size());
    if (params.orthonormal_terms && params.scale_form == ScaleForm::half_norm) {
      s = h.dot(mh);
      ds = mh;
    } else if (params.orthonormal_terms) {
      const Vector d = x - vold;
      const Vector md = m * d;
      s = 1.0 - 0.25 * d.dot(md);
      ds = -0.5 * md;
    }
    Vector residual = inv_gt * (m * (x - vold)) + s * kh - sigma * mh;
    std::vector<double> c(mw.size());
    for (std::size_t l = 0; l < mw.size(); ++l) {
      c[l] = ktw[l].dot(h);
      residual -= s * c[l] * mw[l];
    }

    const SparseMatrix b = (inv_gt - 0.5 * sigma) * m + 0.5 * s * kop;
    DenseMatrix u(x.size(), r);
    DenseMatrix w(x.size(), r);
    // Woodbury form (B - U W^T): U holds the negated left factors.
    u.col(0) = -kh;
    w.col(0) = ds;
    u.col(1) = mh;
    w.col(1) = 0.5 * (kop * h + kop.transpose() * h);
    for (std::size_t l = 0; l < mw.size(); ++l) {
      u.col(2 + l) = mw[l];
      w.col(2 + l) = 0.5 * s * ktw[l] + c[l] * ds;
    }
    const Vector step = woodbury_solve(factor_general(b), u, w, residual);
    if (!step.allFinite()) throw NonFiniteError("non-finite Newton step");
    x -= step;
    const double size = std::sqrt(std::max(0.0, step.dot(m * step)));
    if (size <= params.picard_tol && !(size > 0.0 && size < 0.5 * previous_step)) return {x, it};
    previous_step = size;
  }
  throw Error("no convergence within 30 iterations");
}

}  // namespace

VStepResult v_step(const FemSpace& /*space*/, const Operators& ops, const SchemeParams& params,
                   const SparseMatrix& director_op, const SaddleState& previous, const std::vector<Vector>& updated,
                   int i) {
  const int k = static_cast<int>(previous.v.size());
  if (i < 0 || i >= k) throw Error("v_step: director index out of range");
  if (static_cast<int>(updated.size()) < i) throw Error("v_step: directors before i must already be updated");

  const SparseMatrix& m = ops.mass;
  const SparseMatrix& kop = director_op;
  const double inv_gt = 1.0 / (params.gamma * params.tau);
  const Vector& vold = previous.v[i];

  // Directors the relation couples to: new level below i, old level above i.
  std::vector<Vector> others_m;
  std::vector<Vector> others_kt;
  for (int l = 0; l < k; ++l) {
    if (l == i) continue;
    const Vector& w = l < i ? updated[l] : previous.v[l];
    others_m.push_back(m * w);
    others_kt.push_back(kop.transpose() * w);
  }
  const Vector m_vold = m * vold;
  const Vector k_vold = kop * vold;

  struct Frozen {
    double s = 1.0;
    double sigma = 0.0;
    double alpha = 0.0;
    Vector rhs;
  };
  // Scalars of the relation frozen at iterate x; the linear system is (alpha M + K) x = rhs.
  auto freeze = [&](const Vector& x) {
    Frozen fz;
    const Vector half = 0.5 * (x + vold);
    if (!params.orthonormal_terms) {
      fz.s = 1.0;
    } else if (params.scale_form == ScaleForm::half_norm) {
      fz.s = half.dot(m * half);
    } else {
      const Vector d = x - vold;
      fz.s = 1.0 - 0.25 * d.dot(m * d);
    }
    fz.sigma = half.dot(kop * half);
    fz.alpha = 2.0 * inv_gt / fz.s - fz.sigma / fz.s;
    fz.rhs = (2.0 * inv_gt / fz.s + fz.sigma / fz.s) * m_vold - k_vold;
    for (std::size_t l = 0; l < others_m.size(); ++l) fz.rhs += 2.0 * others_kt[l].dot(half) * others_m[l];
    return fz;
  };
  auto frozen_matrix = [&](const Frozen& fz) {
    SparseMatrix lhs = fz.alpha * m + kop;
    return lhs;
  };

  auto finish = [&](Vector x, int iterations) {
    VStepResult result;
    const Vector half = 0.5 * (x + vold);
    result.v = std::move(x);
    result.iterations = iterations;
    result.half_norm_sq = half.dot(m * half);
    result.sigma = half.dot(kop * half);
    return result;
  };

  VSolver mode = params.v_solver == VSolver::automatic ? VSolver::shared : params.v_solver;
  const bool may_fall_back = params.v_solver == VSolver::automatic;
  Factorization local;

  Vector x = vold;
  Vector best = vold;
  double best_increment = std::numeric_limits<double>::infinity();
  double previous_increment = -1.0;
  int stalled = 0;
  int it = 1;
  for (; it <= params.picard_max; ++it) {
    const Frozen fz = freeze(x);
    Vector next;
    if (mode == VSolver::direct) {
      next = factor_general(frozen_matrix(fz)).solve(fz.rhs);
    } else {
      if (mode == VSolver::factored && local.empty()) local = factor_general(frozen_matrix(fz));
      const Vector defect = fz.rhs - fz.alpha * (m * x) - kop * x;
      next = x + (mode == VSolver::factored ? local.solve(defect) : ops.v_shared.solve(defect));
    }
    if (!next.allFinite()) break;
    const Vector delta = next - x;
    const double increment = std::sqrt(std::max(0.0, delta.dot(m * delta)));
    x = std::move(next);
    if (increment < best_increment) {
      best_increment = increment;
      best = x;
    }
    // Past the tolerance, keep iterating while the increment still shrinks:
    // relation defects feed the orthonormality drift through the coupling.
    if (params.polish && increment <= params.picard_tol && it < params.picard_max && increment > 0.0 &&
        increment < 0.5 * previous_increment) {
      previous_increment = increment;
      continue;
    }
    if (increment <= params.picard_tol) return finish(std::move(x), it);
    const bool slow = it >= 2 && increment > 0.3 * previous_increment;
    if (slow && may_fall_back && mode == VSolver::shared) {
      mode = VSolver::factored;
    } else if (slow && mode == VSolver::factored) {
      local = Factorization();  // refactor at the current iterate
    }
    stalled = it >= 2 && increment > 0.95 * previous_increment ? stalled + 1 : 0;
    previous_increment = increment;
    if (stalled >= 5) break;
  }
  it = std::min(it, params.picard_max);

  // The frozen-scalar map does not contract (large tau against the curvature
  // scale). Newton on the full relation from the best Picard iterate.
  if (params.newton_fallback) {
    try {
      auto [v, newton_iterations] = newton_director(ops, params, kop, vold, previous, updated, i, best);
      return finish(std::move(v), it + newton_iterations);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "v_step: director " << (i + 1) << ": Picard stalled (smallest increment " << best_increment
          << ") and Newton failed: " << e.what();
      throw Error(msg.str());
    }
  }
  std::ostringstream msg;
  msg << "v_step: Picard iteration for director " << (i + 1) << " did not reach tolerance " << params.picard_tol
      << " within " << params.picard_max << " iterations (last increment " << previous_increment << ")";
  throw Error(msg.str());
}

GuardReport check_guard(const std::vector<Vector>& v_half, const SparseMatrix& director_op,
                        const SchemeParams& params) {
  GuardReport report;
  const double inv_gt = 1.0 / (params.tau * params.gamma);
  for (const auto& half : v_half) {
    const double s = 0.5 * half.dot(director_op * half);
    const double margin = std::abs(inv_gt - s);
    report.values.push_back(s);
    report.margins.push_back(margin);
    if (margin < params.guard_eps) report.warning = true;
  }
  return report;
}

Residual residual_Finf(const FemSpace& space, const Problem& problem, const SparseMatrix& stiffness,
                       const SparseMatrix* advection_reaction, const Vector& u, ResidualForm form) {
  space.check_conforming(u, "residual_Finf");
  Vector weak = -(stiffness * u);
  if (advection_reaction) weak += (*advection_reaction) * u;
  Residual r;
  if (form == ResidualForm::weak_lumped) {
    weak += assemble_nonlinear_load(space, u, problem.f);
    r.values = weak.cwiseQuotient(space.lumped_mass());
  } else {
    r.values = weak.cwiseQuotient(space.lumped_mass());
    for (int d = 0; d < u.size(); ++d) r.values[d] += problem.f(u[d]);
  }
  r.inf_norm = r.values.size() ? r.values.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

Stepper::Stepper(const FemSpace& space, const Problem& problem, SchemeParams params, SaddleState initial,
                 ResidualForm residual_form)
    : space_(space),
      problem_(problem),
      params_(std::move(params)),
      ops_(assemble_operators(space, problem, params_)),
      state_(std::move(initial)),
      residual_form_(residual_form) {
  space_.check_conforming(state_.u, "Stepper");
  if (static_cast<int>(state_.v.size()) != params_.k)
    throw Error("Stepper: initial state has " + std::to_string(state_.v.size()) + " directors, scheme expects k = " +
                std::to_string(params_.k));
  for (const auto& v : state_.v) space_.check_conforming(v, "Stepper");
  total_steps_ = params_.num_steps();
}

StepDiagnostics Stepper::step() {
  const int n = state_.n + 1;
  const int k = params_.k;
  StepDiagnostics diag;
  diag.step = n;
  diag.time = n * params_.tau;

  try {
    Vector u_new = u_step(space_, problem_, ops_, params_, state_);
    const SparseMatrix kop = director_operator(space_, problem_, ops_, u_new);

    std::vector<Vector> v_new;
    v_new.reserve(k);
    std::vector<Vector> halves;
    halves.reserve(k);
    for (int i = 0; i < k; ++i) {
      VStepResult r = v_step(space_, ops_, params_, kop, state_, v_new, i);
      diag.picard_iterations.push_back(r.iterations);
      const Vector delta = r.v - state_.v[i];
      const double expected = 1.0 - delta.dot(ops_.mass * delta) / 4.0;
      diag.half_step_defect = std::max(diag.half_step_defect, std::abs(r.half_norm_sq - expected));
      halves.push_back(0.5 * (r.v + state_.v[i]));
      v_new.push_back(std::move(r.v));
    }

    const GuardReport guard = check_guard(halves, kop, params_);
    diag.guard_values = guard.values;
    diag.guard_margins = guard.margins;
    diag.guard_min = guard.margins.empty() ? 0.0 : *std::min_element(guard.margins.begin(), guard.margins.end());
    if (guard.warning) {
      std::ostringstream msg;
      msg << "step " << n << ": non-degeneracy margin " << diag.guard_min << " below guard_eps " << params_.guard_eps;
      warnings_.push_back(msg.str());
    }

    diag.gram_drift = gram_drift(space_, v_new);
    for (int p = 0; p < k; ++p) {
      const Vector mv = ops_.mass * v_new[p];
      for (int q = p + 1; q < k; ++q) diag.cross_ortho = std::max(diag.cross_ortho, std::abs(state_.v[q].dot(mv)));
    }
    diag.grad_u = h1_seminorm_weighted(ops_.stiffness, u_new);
    diag.grad_sum = diag.grad_u;
    for (const auto& v : v_new) {
      diag.grad_v.push_back(h1_seminorm_weighted(ops_.stiffness, v));
      diag.grad_sum += diag.grad_v.back();
    }
    diag.residual_inf = residual_Finf(space_, problem_, ops_.stiffness,
                                      ops_.has_advection_reaction ? &ops_.advection_reaction : nullptr, u_new,
                                      residual_form_)
                            .inf_norm;

    state_.u = std::move(u_new);
    state_.v = std::move(v_new);
    state_.n = n;
    state_.t = diag.time;
  } catch (const StepFailure&) {
    throw;
  } catch (const Error& e) {
    throw StepFailure(n, e.what());
  }

  if (!std::isfinite(diag.gram_drift) || !std::isfinite(diag.grad_sum) || !std::isfinite(diag.residual_inf))
    throw StepFailure(n, "non-finite diagnostics");
  return diag;
}

RunResult run(const FemSpace& space, const Problem& problem, const SchemeParams& params, SaddleState initial,
              ResidualForm residual_form, const StepObserver& observer) {
  Stepper stepper(space, problem, params, std::move(initial), residual_form);
  RunResult result;
  result.report.steps.reserve(stepper.total_steps());
  while (!stepper.done()) {
    result.report.steps.push_back(stepper.step());
    if (observer) observer(stepper.state(), result.report.steps.back());
  }
  result.state = stepper.state();
  result.report.warnings = stepper.warnings();
  const Operators& ops = stepper.operators();
  Residual r = residual_Finf(space, problem, ops.stiffness,
                             ops.has_advection_reaction ? &ops.advection_reaction : nullptr, result.state.u,
                             residual_form);
  result.report.final_residual = std::move(r.values);
  result.report.final_residual_inf = r.inf_norm;
  return result;
}

}  // namespace hisd
