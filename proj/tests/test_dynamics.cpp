#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dense_oracle.hpp"
#include "hisd/config.hpp"
#include "hisd/dynamics.hpp"

using namespace hisd;

namespace {

RunConfig ex1a(int cells, double tau, double T, int k) {
  RunConfig c = preset("example1a").front();
  c.cells = {cells};
  c.tau = tau;
  c.T = T;
  c.scheme.k = k;
  c.v0.resize(k);
  for (int i = 0; i < k; ++i) c.v0[i] = make_selector("normalized_sine", {{"modes", {double(i + 1)}}});
  return c;
}

struct Instance {
  RunConfig config;
  FemSpace space;
  Problem problem;
  SchemeParams params;
  explicit Instance(RunConfig c)
      : config(std::move(c)), space(build_config_mesh(config)), problem(build_problem(config)),
        params(build_scheme(config)) {}
  SaddleState initial() const { return build_initial_state(space, problem, config); }
};

// Smooth random field: a few sine modes with seeded coefficients.
Vector random_smooth(const FemSpace& space, unsigned seed, double scale) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  double c[5];
  for (double& x : c) x = scale * d(rng);
  return interpolate(space, [&](const Point& p) {
    const double x = p.x() / space.mesh().extents[0];
    const double y = space.dim() == 2 ? p.y() / space.mesh().extents[1] : 0.5;
    double s = 0.0;
    for (int m = 0; m < 5; ++m) s += c[m] * std::sin((m + 1) * std::numbers::pi * x) * std::sin(std::numbers::pi * y);
    return s;
  });
}

}  // namespace

TEST(Dynamics, OrthonormalizeProducesIdentityGram) {
  const FemSpace space(build_mesh(2, {1.0, 1.0}, {8, 8}));
  std::vector<Vector> v;
  for (unsigned s = 0; s < 4; ++s) v.push_back(random_smooth(space, s, 1.0) + 0.01 * Vector::Ones(space.num_dofs()));
  const auto q = orthonormalize(space, v);
  EXPECT_LT(gram_drift(space, q), 1e-14);
}

TEST(Dynamics, OrthonormalizeRejectsDependentInput) {
  const FemSpace space(build_mesh(1, {1.0}, {8}));
  const Vector a = Vector::LinSpaced(space.num_dofs(), 1.0, 2.0);
  EXPECT_THROW(orthonormalize(space, {a, 2.0 * a}), Error);
}

TEST(Dynamics, SchemeParamsValidation) {
  SchemeParams p;
  p.tau = 1e-3;
  p.T = 5.0;
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.num_steps(), 5000);
  p.T = 0.0105;
  EXPECT_THROW(p.validate(), Error);
  p.T = 5.0;
  p.beta = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p.beta = 1.0;
  p.k = -1;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Dynamics, StepperRejectsDirectorCountMismatch) {
  Instance s(ex1a(16, 1e-3, 0.01, 2));
  SaddleState init = s.initial();
  init.v.pop_back();
  EXPECT_THROW(Stepper(s.space, s.problem, s.params, init), Error);
}

TEST(Dynamics, UStepMatchesDenseSolve) {
  Instance s(ex1a(12, 1e-2, 0.01, 3));
  const SaddleState init = s.initial();
  const Operators ops = assemble_operators(s.space, s.problem, s.params);
  const Vector u = u_step(s.space, s.problem, ops, s.params, init);
  const oracle::DenseStep d = oracle::dense_step(s.space, s.problem, s.params, init);
  EXPECT_LT(l2_norm(s.space, u - d.u), 1e-12);
}

// One full step against the dense fully coupled Newton solve of the same relations.
TEST(Dynamics, OneStepMatchesDenseNewtonOracle) {
  for (VSolver mode : {VSolver::direct, VSolver::automatic, VSolver::shared, VSolver::factored}) {
    RunConfig c = ex1a(8, 1e-3, 1e-3, 2);
    c.scheme.v_solver = mode;
    Instance s(c);
    SaddleState init = s.initial();
    init.u = random_smooth(s.space, 5, 1.5);
    const oracle::DenseStep d = oracle::dense_step(s.space, s.problem, s.params, init);
    ASSERT_LT(d.residual, 1e-12);
    Stepper stepper(s.space, s.problem, s.params, init);
    stepper.step();
    EXPECT_LT(l2_norm(s.space, stepper.state().u - d.u), 1e-9) << to_string(mode);
    for (int i = 0; i < 2; ++i) EXPECT_LT(l2_norm(s.space, stepper.state().v[i] - d.v[i]), 1e-9) << to_string(mode);
  }
}

TEST(Dynamics, VariantStepMatchesDenseOracle) {
  RunConfig c = ex1a(8, 1e-3, 1e-3, 2);
  c.scheme.orthonormal_terms = false;
  Instance s(c);
  const SaddleState init = s.initial();
  const oracle::DenseStep d = oracle::dense_step(s.space, s.problem, s.params, init);
  Stepper stepper(s.space, s.problem, s.params, init);
  stepper.step();
  for (int i = 0; i < 2; ++i) EXPECT_LT(l2_norm(s.space, stepper.state().v[i] - d.v[i]), 1e-9);
}

// Discrete orthonormality, cross-level orthogonality and the half-step identity
// along short runs from several seeded initial states, in 1D and 2D.
TEST(Dynamics, InvariantsHoldAlongRuns) {
  struct Case {
    int dim, k;
    unsigned seed;
  };
  for (Case cs : {Case{1, 1, 1}, Case{1, 2, 2}, Case{1, 3, 3}, Case{1, 3, 4}, Case{2, 2, 5}, Case{2, 3, 6}}) {
    RunConfig c;
    if (cs.dim == 1) {
      c = ex1a(24, 1e-3, 0.2, cs.k);
    } else {
      c = preset("example2").front();
      c.cells = {8, 8};
      c.T = 0.2;
      c.scheme = SchemeParams{};
      c.scheme.k = cs.k;
      c.v0.clear();
      for (int i = 0; i < cs.k; ++i) c.v0.push_back(make_selector("normalized_sine", {{"modes", {double(i + 1), 1.0}}}));
    }
    Instance s(c);
    SaddleState init = s.initial();
    init.u = random_smooth(s.space, cs.seed, 1.0);
    const RunResult r = run(s.space, s.problem, s.params, init);
    ASSERT_EQ(static_cast<int>(r.report.steps.size()), s.params.num_steps());
    double drift = 0.0, cross = 0.0, half = 0.0;
    for (const auto& d : r.report.steps) {
      drift = std::max(drift, d.gram_drift);
      cross = std::max(cross, d.cross_ortho);
      half = std::max(half, d.half_step_defect);
    }
    EXPECT_LE(drift, 1e-10) << "dim " << cs.dim << " k " << cs.k;
    EXPECT_LE(cross, 1e-10) << "dim " << cs.dim << " k " << cs.k;
    EXPECT_LE(half, 1e-12) << "dim " << cs.dim << " k " << cs.k;
  }
}

TEST(Dynamics, VariantLosesOrthonormality) {
  RunConfig c = ex1a(32, 1e-3, 0.5, 3);
  c.u0 = make_selector("sine", {{"amplitude", {1.0}}, {"modes", {1.0}}});
  c.scheme.orthonormal_terms = false;
  Instance s(c);
  const RunResult r = run(s.space, s.problem, s.params, s.initial());
  EXPECT_GT(gram_drift(s.space, r.state.v), 1e-6);
}

TEST(Dynamics, GuardValuesAreHalfTheCurvature) {
  Instance s(ex1a(16, 1e-3, 1e-3, 2));
  const SaddleState init = s.initial();
  const Operators ops = assemble_operators(s.space, s.problem, s.params);
  const SparseMatrix k = director_operator(s.space, s.problem, ops, init.u);
  const GuardReport g = check_guard(init.v, k, s.params);
  ASSERT_EQ(g.values.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(g.values[i], 0.5 * init.v[i].dot(k * init.v[i]), 1e-12);
    EXPECT_NEAR(g.margins[i], std::abs(1.0 / s.params.tau - g.values[i]), 1e-9);
  }
  EXPECT_FALSE(g.warning);
}

TEST(Dynamics, ResidualOfZeroSolutionVanishes) {
  Instance s(ex1a(16, 1e-3, 1e-3, 1));
  const SparseMatrix a = assemble_stiffness(s.space, s.problem.a);
  const Vector zero = Vector::Zero(s.space.num_dofs());
  EXPECT_EQ(residual_Finf(s.space, s.problem, a, nullptr, zero).inf_norm, 0.0);
  EXPECT_EQ(residual_Finf(s.space, s.problem, a, nullptr, zero, ResidualForm::nodal).inf_norm, 0.0);
}

TEST(Dynamics, ResidualFormsAgreeForLinearNonlinearity) {
  // f(u) = 2u: the weak load (2u_h, phi) is M 2u, the nodal form uses lumped mass.
  RunConfig c = ex1a(16, 1e-3, 1e-3, 1);
  c.nonlinearity = make_selector("polynomial", {{"coefficients", {0.0, 2.0}}});
  Instance s(c);
  const SparseMatrix a = assemble_stiffness(s.space, s.problem.a);
  const Vector u = random_smooth(s.space, 9, 1.0);
  const Residual weak = residual_Finf(s.space, s.problem, a, nullptr, u);
  const Vector expected = (-(a * u) + 2.0 * (s.space.mass() * u)).cwiseQuotient(s.space.lumped_mass());
  EXPECT_LT((weak.values - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dynamics, GradientFlowDecreasesResidualTowardMinimum) {
  // k = 0 with f(u) = -u: plain heat flow to zero.
  RunConfig c = ex1a(16, 1e-2, 1.0, 0);
  c.nonlinearity = make_selector("polynomial", {{"coefficients", {0.0, -1.0}}});
  Instance s(c);
  const RunResult r = run(s.space, s.problem, s.params, s.initial());
  EXPECT_LT(r.report.steps.back().residual_inf, r.report.steps.front().residual_inf);
  EXPECT_LT(l2_norm(s.space, r.state.u), 0.2);
}

TEST(Dynamics, ScaleFormsAgreeOnOneStep) {
  RunConfig c = ex1a(16, 1e-3, 1e-3, 3);
  Instance a(c);
  c.scheme.scale_form = ScaleForm::half_norm;
  Instance b(c);
  Stepper sa(a.space, a.problem, a.params, a.initial());
  Stepper sb(b.space, b.problem, b.params, b.initial());
  sa.step();
  sb.step();
  for (int i = 0; i < 3; ++i) EXPECT_LT(l2_norm(a.space, sa.state().v[i] - sb.state().v[i]), 1e-11);
}
