#pragma once

#include <array>
#include <vector>

#include "hisd/mesh.hpp"
#include "hisd/problem.hpp"
#include "hisd/types.hpp"

namespace hisd {

/// Continuous piecewise-linear space over a Mesh, restricted to interior nodes.
///
/// The space precomputes per-element geometry, the quadrature rule used for
/// every integral (3-point Gauss per segment, 3-point degree-2 rule per
/// triangle), and the fixed sparsity pattern of all P1 bilinear forms.
class FemSpace {
 public:
  static constexpr int kQuadPoints = 3;

  struct QuadPoint {
    Point x;
    double weight = 0.0;
    std::array<double, 3> shape{};
  };

  struct Element {
    std::array<int, 3> dofs{-1, -1, -1};
    /// Constant shape-function gradients.
    std::array<Eigen::Vector2d, 3> grad{};
    double measure = 0.0;
    std::array<QuadPoint, kQuadPoints> quad{};
  };

  explicit FemSpace(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  int dim() const { return mesh_.dim; }
  int num_dofs() const { return mesh_.num_dofs(); }
  int nodes_per_element() const { return mesh_.nodes_per_element(); }
  const std::vector<Element>& elements() const { return elements_; }

  /// Consistent mass matrix, cached at construction.
  const SparseMatrix& mass() const { return mass_; }
  /// Row sums of the mass matrix.
  const Vector& lumped_mass() const { return lumped_mass_; }

  /// Zero-valued matrix carrying the shared P1 sparsity pattern.
  const SparseMatrix& pattern() const { return pattern_; }
  /// Position in pattern().valuePtr() of local pair (i, j) of element e, or -1.
  int slot(int e, int i, int j) const { return slots_[(static_cast<std::size_t>(e) * 3 + i) * 3 + j]; }

  /// Value of the P1 function with interior coefficients u at quadrature point q of element e.
  double value_at(const Vector& u, int e, int q) const;
  /// Gradient of the P1 function on element e.
  Eigen::Vector2d gradient_on(const Vector& u, int e) const;

  void check_conforming(const Vector& u, const char* what) const;

 private:
  Mesh mesh_;
  std::vector<Element> elements_;
  SparseMatrix pattern_;
  std::vector<int> slots_;
  SparseMatrix mass_;
  Vector lumped_mass_;
};

SparseMatrix assemble_mass(const FemSpace& space);

/// A_ij = (a grad phi_j, grad phi_i). Throws when a(x) is not symmetric at a quadrature point.
SparseMatrix assemble_stiffness(const FemSpace& space, const MatrixField& a);

/// G_ij = (b . grad phi_j + c phi_j, phi_i); either callback may be empty.
SparseMatrix assemble_advection_reaction(const FemSpace& space, const VectorField& b, const ScalarField& c);

/// Entries (g(u_h), phi_i).
Vector assemble_nonlinear_load(const FemSpace& space, const Vector& u, const ScalarMap& g);

/// W_ij = (g(u_h) phi_j, phi_i).
SparseMatrix assemble_weighted_mass(const FemSpace& space, const Vector& u, const ScalarMap& g);

/// Ritz projection: (a grad(g - Pg), grad chi) = 0 for all chi in the space.
Vector elliptic_projection(const FemSpace& space, const AnalyticFunction& g, const MatrixField& a);

/// Nodal interpolant restricted to interior nodes.
Vector interpolate(const FemSpace& space, const ScalarField& g);

/// Evaluates the P1 function u at an arbitrary point of the closed domain.
double evaluate(const FemSpace& space, const Vector& u, const Point& x);

/// Interpolates a coarse field onto the nodes of another space (exact for nested meshes).
Vector transfer(const FemSpace& from, const Vector& u, const FemSpace& to);

/// True if every node of `fine` lies on a node line of `coarse` in each axis with
/// an integer refinement ratio and identical extents.
bool is_nested(const FemSpace& coarse, const FemSpace& fine);

double l2_inner(const FemSpace& space, const Vector& x, const Vector& y);
double l2_norm(const FemSpace& space, const Vector& x);
/// sqrt(x^T A x) for a stiffness matrix A.
double h1_seminorm_weighted(const SparseMatrix& stiffness, const Vector& x);

/// Checks symmetry and w.a(x)w >= a0|w|^2 at every quadrature point.
void check_ellipticity(const FemSpace& space, const Problem& problem);

}  // namespace hisd
