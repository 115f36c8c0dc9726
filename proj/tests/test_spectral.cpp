#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "hisd/config.hpp"
#include "hisd/spectral.hpp"

using namespace hisd;

namespace {

constexpr double kPi = std::numbers::pi;

Problem laplace_1d() {
  Problem p;
  p.dim = 1;
  p.a = constant_diffusion(1.0);
  p.f = [](double) { return 0.0; };
  p.fprime = [](double) { return 0.0; };
  return p;
}

// Dense generalized symmetric eigenvalues of (H, M), ascending.
Vector dense_eigenvalues(const HessianOperator& h) {
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(DenseMatrix(h.matrix), DenseMatrix(h.mass));
  return es.eigenvalues();
}

}  // namespace

TEST(Spectral, P1LaplacianEigenvaluesMatchClosedForm) {
  // lambda_j = 6 / h^2 (1 - cos(j h)) / (2 + cos(j h)) on (0, pi).
  const int cells = 64;
  const double h = kPi / cells;
  const FemSpace space(build_mesh(1, {kPi}, {cells}));
  const Spectrum s = smallest_eigenpairs(assemble_hessian(space, laplace_1d(), Vector::Zero(space.num_dofs())), 6);
  ASSERT_EQ(s.size(), 6);
  for (int j = 1; j <= 6; ++j) {
    const double exact = 6.0 / (h * h) * (1.0 - std::cos(j * h)) / (2.0 + std::cos(j * h));
    EXPECT_NEAR(s.values[j - 1], exact, 1e-9 * exact);
  }
  EXPECT_LE(s.max_residual, 1e-8);
}

TEST(Spectral, EigenvectorsAreMassOrthonormal) {
  const FemSpace space(build_mesh(2, {1.0, 1.0}, {12, 12}));
  RunConfig c = preset("example2").front();
  c.cells = {12, 12};
  const Problem p = build_problem(c);
  const Spectrum s = smallest_eigenpairs(assemble_hessian(space, p, Vector::Zero(space.num_dofs())), 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      EXPECT_NEAR(s.vectors[i].dot(space.mass() * s.vectors[j]), i == j ? 1.0 : 0.0, 1e-9);
}

TEST(Spectral, MatchesDenseSolverAtNonlinearState) {
  RunConfig c = preset("example1a").front();
  c.cells = {48};
  const FemSpace space(build_config_mesh(c));
  const Problem p = build_problem(c);
  const Vector u = interpolate(space, [](const Point& x) { return 3.0 * std::sin(2 * x.x()); });
  const HessianOperator h = assemble_hessian(space, p, u);
  const Vector dense = dense_eigenvalues(h);
  const Spectrum s = smallest_eigenpairs(h, 8);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(s.values[i], dense[i], 1e-8 * std::max(1.0, std::abs(dense[i])));
}

TEST(Spectral, ResultIndependentOfShift) {
  RunConfig c = preset("example1a").front();
  c.cells = {64};
  const FemSpace space(build_config_mesh(c));
  const Problem p = build_problem(c);
  const Vector u = interpolate(space, [](const Point& x) { return 2.0 * std::sin(x.x()); });
  const HessianOperator h = assemble_hessian(space, p, u);
  const Spectrum a = smallest_eigenpairs(h, 6);
  const Spectrum b = smallest_eigenpairs(h, 6, h.lower_bound - 37.5);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-8 * std::max(1.0, std::abs(a.values[i])));
}

TEST(Spectral, LowerBoundHolds) {
  RunConfig c = preset("example1a").front();
  c.cells = {32};
  const FemSpace space(build_config_mesh(c));
  const Problem p = build_problem(c);
  const Vector u = interpolate(space, [](const Point& x) { return 4.0 * std::sin(3 * x.x()); });
  const HessianOperator h = assemble_hessian(space, p, u);
  EXPECT_GE(dense_eigenvalues(h)[0], h.lower_bound);
}

TEST(Spectral, ExampleTwoZeroStateHasIndexEight) {
  // 0.006 pi^2 (m^2 + n^2) - 1 < 0 for exactly 8 pairs (m, n).
  RunConfig c = preset("example2").front();
  c.cells = {32, 32};
  const FemSpace space(build_config_mesh(c));
  const Spectrum s = spectrum_window(assemble_hessian(space, build_problem(c), Vector::Zero(space.num_dofs())), 6);
  const MorseIndex mi = morse_index(s);
  EXPECT_EQ(mi.index, 8);
  EXPECT_EQ(mi.near_zero, 0);
  EXPECT_GE(s.size(), 9);
}

TEST(Spectral, MorseIndexNeedsPositiveWindow) {
  Spectrum s;
  s.values = {-3.0, -1.0};
  EXPECT_THROW(morse_index(s), Error);
  s.values = {-3.0, -1.0, 2.0};
  EXPECT_EQ(morse_index(s).index, 2);
  s.values = {-3.0, 1e-12, 2.0};
  const MorseIndex mi = morse_index(s);
  EXPECT_EQ(mi.index, 1);
  EXPECT_EQ(mi.near_zero, 1);
  EXPECT_NEAR(default_zero_tol(s), 3e-8, 1e-20);
}

TEST(Spectral, NonsymmetricRealPartsMatchDense) {
  RunConfig c = preset("example1b").front();
  c.cells = {40};
  const FemSpace space(build_config_mesh(c));
  const Problem p = build_problem(c);
  const Vector u = interpolate(space, [](const Point& x) { return 0.5 * x.x() * std::sin(x.x()); });
  const HessianOperator h = assemble_hessian(space, p, u);
  ASSERT_FALSE(h.symmetric);
  Eigen::GeneralizedEigenSolver<DenseMatrix> es(DenseMatrix(h.matrix), DenseMatrix(h.mass));
  std::vector<double> re;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) re.push_back(es.eigenvalues()[i].real());
  std::sort(re.begin(), re.end());
  const Spectrum s = smallest_eigenpairs(h, 5);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(s.values[i], re[i], 1e-7 * std::max(1.0, std::abs(re[i])));
}

TEST(Spectral, RejectsBadRequests) {
  const FemSpace space(build_mesh(1, {kPi}, {8}));
  const HessianOperator h = assemble_hessian(space, laplace_1d(), Vector::Zero(space.num_dofs()));
  EXPECT_THROW(smallest_eigenpairs(h, 0), Error);
  EXPECT_THROW(smallest_eigenpairs(h, 8), Error);
  EXPECT_EQ(smallest_eigenpairs(h, 7).size(), 7);
}
