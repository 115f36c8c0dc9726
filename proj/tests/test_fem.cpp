#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hisd/fem.hpp"
#include "hisd/mesh.hpp"

using namespace hisd;

namespace {

constexpr double kPi = std::numbers::pi;

Vector random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Exact P1 mass form: sum over elements |T| / ((d+1)(d+2)) (sum_i u_i^2 + (sum_i u_i)^2).
double exact_mass_form(const FemSpace& space, const Vector& u) {
  const Mesh& mesh = space.mesh();
  double total = 0.0;
  for (const auto& e : space.elements()) {
    const int p = mesh.nodes_per_element();
    double sq = 0.0, s = 0.0;
    for (int i = 0; i < p; ++i) {
      const double ui = e.dofs[i] >= 0 ? u[e.dofs[i]] : 0.0;
      sq += ui * ui;
      s += ui;
    }
    total += e.measure * (sq + s * s) / ((p) * (p + 1));
  }
  return total;
}

}  // namespace

TEST(Mesh, CountsAndBoundary) {
  const Mesh m1 = build_mesh(1, {kPi}, {10});
  EXPECT_EQ(m1.num_nodes(), 11);
  EXPECT_EQ(m1.num_elements(), 10);
  EXPECT_EQ(m1.num_dofs(), 9);
  EXPECT_NEAR(m1.mesh_size(), kPi / 10, 1e-15);

  const Mesh m2 = build_mesh(2, {1.0, 2.0}, {4, 8});
  EXPECT_EQ(m2.num_nodes(), 5 * 9);
  EXPECT_EQ(m2.num_elements(), 2 * 4 * 8);
  EXPECT_EQ(m2.num_dofs(), 3 * 7);
  for (int node = 0; node < m2.num_nodes(); ++node) EXPECT_EQ(m2.on_boundary[node], m2.dof_of_node[node] < 0);
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(build_mesh(3, {1.0}, {4}), Error);
  EXPECT_THROW(build_mesh(1, {1.0}, {0}), Error);
  EXPECT_THROW(build_mesh(1, {-1.0}, {4}), Error);
  EXPECT_THROW(build_mesh(2, {1.0}, {4}), Error);
}

TEST(Fem, OneDimensionalMatricesMatchClosedForm) {
  const int cells = 12;
  const FemSpace space(build_mesh(1, {kPi}, {cells}));
  const double h = kPi / cells;
  const DenseMatrix m = DenseMatrix(space.mass());
  const DenseMatrix a = DenseMatrix(assemble_stiffness(space, [](const Point&) {
    return Eigen::Matrix2d(Eigen::Matrix2d::Identity());
  }));
  for (int i = 0; i < space.num_dofs(); ++i) {
    EXPECT_NEAR(m(i, i), 2.0 * h / 3.0, 1e-14);
    EXPECT_NEAR(a(i, i), 2.0 / h, 1e-12);
    if (i + 1 < space.num_dofs()) {
      EXPECT_NEAR(m(i, i + 1), h / 6.0, 1e-14);
      EXPECT_NEAR(a(i, i + 1), -1.0 / h, 1e-12);
    }
  }
}

TEST(Fem, TwoDimensionalStiffnessIsFivePointStencil) {
  const int cells = 6;
  const double coef = 0.3;
  const FemSpace space(build_mesh(2, {1.0, 1.0}, {cells, cells}));
  const DenseMatrix a = DenseMatrix(assemble_stiffness(space, [coef](const Point&) {
    return Eigen::Matrix2d(coef * Eigen::Matrix2d::Identity());
  }));
  const Mesh& mesh = space.mesh();
  for (int d = 0; d < space.num_dofs(); ++d) {
    EXPECT_NEAR(a(d, d), 4.0 * coef, 1e-12);
    const int node = mesh.node_of_dof[d];
    const int i = node % (cells + 1), j = node / (cells + 1);
    const int right = mesh.dof_of_node[mesh.node_index(std::min(i + 1, cells), j)];
    const int diag = mesh.dof_of_node[mesh.node_index(std::min(i + 1, cells), std::min(j + 1, cells))];
    if (right >= 0) {
      EXPECT_NEAR(a(d, right), -coef, 1e-12);
    }
    if (diag >= 0 && diag != d) {
      EXPECT_NEAR(a(d, diag), 0.0, 1e-12);
    }
  }
}

TEST(Fem, MassFormIsExactForP1Fields) {
  for (int dim : {1, 2}) {
    const FemSpace space(dim == 1 ? build_mesh(1, {2.0}, {9}) : build_mesh(2, {1.0, 0.5}, {5, 3}));
    for (unsigned seed = 0; seed < 5; ++seed) {
      const Vector u = random_vector(space.num_dofs(), seed);
      EXPECT_NEAR(u.dot(space.mass() * u), exact_mass_form(space, u), 1e-13) << "dim " << dim;
    }
  }
}

TEST(Fem, LoadOfIdentityIsMassTimesField) {
  const FemSpace space(build_mesh(2, {1.0, 1.0}, {6, 6}));
  const Vector u = random_vector(space.num_dofs(), 3);
  const Vector load = assemble_nonlinear_load(space, u, [](double x) { return x; });
  EXPECT_LT((load - space.mass() * u).norm(), 1e-13);
  const SparseMatrix w = assemble_weighted_mass(space, u, [](double) { return 1.0; });
  EXPECT_LT(DenseMatrix(w - space.mass()).norm(), 1e-13);
}

TEST(Fem, ReactionMatrixIsMass) {
  const FemSpace space(build_mesh(1, {kPi}, {16}));
  const SparseMatrix g = assemble_advection_reaction(space, {}, [](const Point&) { return 1.0; });
  EXPECT_LT(DenseMatrix(g - space.mass()).norm(), 1e-13);
}

TEST(Fem, AdvectionMatrixIsSkewForConstantVelocity) {
  // (b u_x, v) + (b v_x, u) = 0 for fields vanishing on the boundary.
  const FemSpace space(build_mesh(1, {1.0}, {10}));
  const SparseMatrix g = assemble_advection_reaction(
      space, [](const Point&) { return Eigen::Vector2d(0.7, 0.0); }, {});
  EXPECT_LT(DenseMatrix(g + SparseMatrix(g.transpose())).norm(), 1e-13);
}

TEST(Fem, RitzProjectionIsNodalInOneDimension) {
  const FemSpace space(build_mesh(1, {kPi}, {20}));
  // Cubic g: the load (g', phi') is integrated exactly by two-point Gauss.
  AnalyticFunction g{[](const Point& x) { return x.x() * (kPi - x.x()) * (x.x() + 1.0); },
                     [](const Point& x) {
                       const double t = x.x();
                       return Eigen::Vector2d(-3 * t * t + 2 * (kPi - 1) * t + kPi, 0.0);
                     }};
  const Vector p = elliptic_projection(space, g, [](const Point&) {
    return Eigen::Matrix2d(Eigen::Matrix2d::Identity());
  });
  const Vector nodal = interpolate(space, g.value);
  EXPECT_LT((p - nodal).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fem, NormOfNormalizedSineConvergesQuadratically) {
  double previous = 0.0;
  for (int cells : {16, 32, 64}) {
    const FemSpace space(build_mesh(1, {kPi}, {cells}));
    const Vector v = interpolate(space, [](const Point& x) { return std::sqrt(2.0 / kPi) * std::sin(x.x()); });
    const double err = std::abs(l2_norm(space, v) - 1.0);
    if (previous > 0.0) {
      EXPECT_NEAR(previous / err, 4.0, 0.2);
    }
    previous = err;
  }
}

TEST(Fem, TransferIsExactOnNestedMeshes) {
  const FemSpace coarse(build_mesh(2, {1.0, 1.0}, {4, 4}));
  const FemSpace fine(build_mesh(2, {1.0, 1.0}, {8, 8}));
  ASSERT_TRUE(is_nested(coarse, fine));
  EXPECT_FALSE(is_nested(fine, coarse));
  EXPECT_FALSE(is_nested(FemSpace(build_mesh(2, {1.0, 1.0}, {3, 3})), fine));
  const Vector u = random_vector(coarse.num_dofs(), 11);
  const Vector t = transfer(coarse, u, fine);
  for (int d = 0; d < fine.num_dofs(); ++d) {
    const Point& x = fine.mesh().nodes[fine.mesh().node_of_dof[d]];
    EXPECT_NEAR(t[d], evaluate(coarse, u, x), 1e-14);
  }
  // Interpolation does not change the function, so the L2 norm is preserved.
  EXPECT_NEAR(l2_norm(fine, t), l2_norm(coarse, u), 1e-13);
}

TEST(Fem, EllipticityCheck) {
  Problem p;
  p.dim = 1;
  p.a = [](const Point&) { return Eigen::Matrix2d(-1.0 * Eigen::Matrix2d::Identity()); };
  p.f = [](double) { return 0.0; };
  p.fprime = [](double) { return 0.0; };
  const FemSpace space(build_mesh(1, {1.0}, {4}));
  EXPECT_THROW(check_ellipticity(space, p), Error);
  p.a = [](const Point&) { return Eigen::Matrix2d(Eigen::Matrix2d::Identity()); };
  EXPECT_NO_THROW(check_ellipticity(space, p));
}

TEST(Fem, NonConformingFieldRejected) {
  const FemSpace space(build_mesh(1, {1.0}, {4}));
  EXPECT_THROW(l2_norm(space, Vector::Zero(5)), Error);
}
