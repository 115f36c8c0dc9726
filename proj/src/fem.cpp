#include "hisd/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "hisd/linalg.hpp"

namespace hisd {

namespace {

double node_value(const Mesh& mesh, const Vector& u, int node) {
  const int dof = mesh.dof_of_node[node];
  return dof < 0 ? 0.0 : u[dof];
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NonFiniteError(std::string(what) + ": callback returned a non-finite value");
}

/// Element loop over all local (i, j) pairs with both DOFs interior; kernel
/// returns the element contribution for that pair.
template <class Kernel>
SparseMatrix assemble_pairs(const FemSpace& space, Kernel&& kernel) {
  SparseMatrix out = space.pattern();
  double* values = out.valuePtr();
  const int nen = space.nodes_per_element();
  const auto& elements = space.elements();
  for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
    const auto& el = elements[e];
    for (int i = 0; i < nen; ++i) {
      if (el.dofs[i] < 0) continue;
      for (int j = 0; j < nen; ++j) {
        if (el.dofs[j] < 0) continue;
        values[space.slot(e, i, j)] += kernel(el, i, j);
      }
    }
  }
  return out;
}

}  // namespace

FemSpace::FemSpace(Mesh mesh) : mesh_(std::move(mesh)) {
  const int nen = mesh_.nodes_per_element();
  elements_.resize(mesh_.elements.size());

  // Reference quadrature: 3-point Gauss on a segment, interior degree-2 rule on a triangle.
  const double g = std::sqrt(3.0 / 5.0) / 2.0;
  const std::array<double, 3> seg_pts{0.5 - g, 0.5, 0.5 + g};
  const std::array<double, 3> seg_wts{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const std::array<std::array<double, 3>, 3> tri_bary{{{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                                                       {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                                                       {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}}};

  for (std::size_t e = 0; e < mesh_.elements.size(); ++e) {
    const auto& nodes = mesh_.elements[e];
    Element& el = elements_[e];
    for (int i = 0; i < nen; ++i) el.dofs[i] = mesh_.dof_of_node[nodes[i]];

    if (mesh_.dim == 1) {
      const double x0 = mesh_.nodes[nodes[0]].x();
      const double x1 = mesh_.nodes[nodes[1]].x();
      const double len = x1 - x0;
      el.measure = len;
      el.grad[0] = Eigen::Vector2d(-1.0 / len, 0.0);
      el.grad[1] = Eigen::Vector2d(1.0 / len, 0.0);
      for (int q = 0; q < kQuadPoints; ++q) {
        el.quad[q].x = Point(x0 + seg_pts[q] * len, 0.0);
        el.quad[q].weight = seg_wts[q] * len;
        el.quad[q].shape = {1.0 - seg_pts[q], seg_pts[q], 0.0};
      }
    } else {
      const Point& p0 = mesh_.nodes[nodes[0]];
      const Point& p1 = mesh_.nodes[nodes[1]];
      const Point& p2 = mesh_.nodes[nodes[2]];
      const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
      el.measure = 0.5 * det;
      el.grad[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / det;
      el.grad[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / det;
      el.grad[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / det;
      for (int q = 0; q < kQuadPoints; ++q) {
        const auto& b = tri_bary[q];
        el.quad[q].x = b[0] * p0 + b[1] * p1 + b[2] * p2;
        el.quad[q].weight = el.measure / 3.0;
        el.quad[q].shape = b;
      }
    }
  }

  const int n = mesh_.num_dofs();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(elements_.size() * nen * nen);
  for (const auto& el : elements_)
    for (int i = 0; i < nen; ++i)
      for (int j = 0; j < nen; ++j)
        if (el.dofs[i] >= 0 && el.dofs[j] >= 0) triplets.emplace_back(el.dofs[i], el.dofs[j], 0.0);
  pattern_.resize(n, n);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  slots_.assign(elements_.size() * 9, -1);
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    for (int i = 0; i < nen; ++i) {
      if (el.dofs[i] < 0) continue;
      for (int j = 0; j < nen; ++j) {
        if (el.dofs[j] < 0) continue;
        const int* begin = inner + outer[el.dofs[i]];
        const int* end = inner + outer[el.dofs[i] + 1];
        const int* it = std::lower_bound(begin, end, el.dofs[j]);
        slots_[(e * 3 + i) * 3 + j] = static_cast<int>(it - inner);
      }
    }
  }

  mass_ = assemble_mass(*this);
  lumped_mass_ = Vector::Zero(n);
  for (int r = 0; r < n; ++r)
    for (SparseMatrix::InnerIterator it(mass_, r); it; ++it) lumped_mass_[r] += it.value();
}

double FemSpace::value_at(const Vector& u, int e, int q) const {
  const auto& el = elements_[e];
  double v = 0.0;
  for (int i = 0; i < nodes_per_element(); ++i)
    if (el.dofs[i] >= 0) v += el.quad[q].shape[i] * u[el.dofs[i]];
  return v;
}

Eigen::Vector2d FemSpace::gradient_on(const Vector& u, int e) const {
  const auto& el = elements_[e];
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int i = 0; i < nodes_per_element(); ++i)
    if (el.dofs[i] >= 0) g += u[el.dofs[i]] * el.grad[i];
  return g;
}

void FemSpace::check_conforming(const Vector& u, const char* what) const {
  if (u.size() != num_dofs())
    throw Error(std::string(what) + ": field has " + std::to_string(u.size()) + " coefficients, space has " +
                std::to_string(num_dofs()) + " interior DOFs");
}

SparseMatrix assemble_mass(const FemSpace& space) {
  return assemble_pairs(space, [](const FemSpace::Element& el, int i, int j) {
    double sum = 0.0;
    for (const auto& qp : el.quad) sum += qp.weight * qp.shape[i] * qp.shape[j];
    return sum;
  });
}

SparseMatrix assemble_stiffness(const FemSpace& space, const MatrixField& a) {
  const int nen = space.nodes_per_element();
  SparseMatrix out = space.pattern();
  double* values = out.valuePtr();
  const auto& elements = space.elements();
  for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
    const auto& el = elements[e];
    Eigen::Matrix2d abar = Eigen::Matrix2d::Zero();
    for (const auto& qp : el.quad) {
      const Eigen::Matrix2d aq = a(qp.x);
      if (!aq.allFinite()) throw NonFiniteError("assemble_stiffness: diffusion coefficient is not finite");
      if (space.dim() == 2 && std::abs(aq(0, 1) - aq(1, 0)) > 1e-14 * std::max(1.0, aq.cwiseAbs().maxCoeff()))
        throw Error("assemble_stiffness: diffusion tensor is not symmetric");
      abar += qp.weight * aq;
    }
    // P1 gradients are constant per element, so only the integral of a enters.
    for (int i = 0; i < nen; ++i) {
      if (el.dofs[i] < 0) continue;
      for (int j = 0; j < nen; ++j) {
        if (el.dofs[j] < 0) continue;
        values[space.slot(e, i, j)] += el.grad[i].dot(abar * el.grad[j]);
      }
    }
  }
  return out;
}

SparseMatrix assemble_advection_reaction(const FemSpace& space, const VectorField& b, const ScalarField& c) {
  const int nen = space.nodes_per_element();
  SparseMatrix out = space.pattern();
  double* values = out.valuePtr();
  const auto& elements = space.elements();
  for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
    const auto& el = elements[e];
    std::array<double, 3> cq{};
    std::array<Eigen::Vector2d, 3> bq{};
    for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
      cq[q] = c ? c(el.quad[q].x) : 0.0;
      bq[q] = b ? b(el.quad[q].x) : Eigen::Vector2d::Zero();
      require_finite(cq[q], "assemble_advection_reaction");
      if (!bq[q].allFinite()) throw NonFiniteError("assemble_advection_reaction: advection field is not finite");
    }
    for (int i = 0; i < nen; ++i) {
      if (el.dofs[i] < 0) continue;
      for (int j = 0; j < nen; ++j) {
        if (el.dofs[j] < 0) continue;
        double sum = 0.0;
        for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
          const auto& qp = el.quad[q];
          sum += qp.weight * (bq[q].dot(el.grad[j]) + cq[q] * qp.shape[j]) * qp.shape[i];
        }
        values[space.slot(e, i, j)] += sum;
      }
    }
  }
  return out;
}

Vector assemble_nonlinear_load(const FemSpace& space, const Vector& u, const ScalarMap& g) {
  space.check_conforming(u, "assemble_nonlinear_load");
  Vector out = Vector::Zero(space.num_dofs());
  const int nen = space.nodes_per_element();
  const auto& elements = space.elements();
  for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
    const auto& el = elements[e];
    for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
      const auto& qp = el.quad[q];
      const double gq = g(space.value_at(u, e, q));
      require_finite(gq, "assemble_nonlinear_load");
      for (int i = 0; i < nen; ++i)
        if (el.dofs[i] >= 0) out[el.dofs[i]] += qp.weight * gq * qp.shape[i];
    }
  }
  return out;
}

SparseMatrix assemble_weighted_mass(const FemSpace& space, const Vector& u, const ScalarMap& g) {
  space.check_conforming(u, "assemble_weighted_mass");
  const int nen = space.nodes_per_element();
  SparseMatrix out = space.pattern();
  double* values = out.valuePtr();
  const auto& elements = space.elements();
  for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
    const auto& el = elements[e];
    std::array<double, 3> wq{};
    for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
      wq[q] = el.quad[q].weight * g(space.value_at(u, e, q));
      require_finite(wq[q], "assemble_weighted_mass");
    }
    for (int i = 0; i < nen; ++i) {
      if (el.dofs[i] < 0) continue;
      for (int j = 0; j < nen; ++j) {
        if (el.dofs[j] < 0) continue;
        double sum = 0.0;
        for (int q = 0; q < FemSpace::kQuadPoints; ++q) sum += wq[q] * el.quad[q].shape[i] * el.quad[q].shape[j];
        values[space.slot(e, i, j)] += sum;
      }
    }
  }
  return out;
}

Vector elliptic_projection(const FemSpace& space, const AnalyticFunction& g, const MatrixField& a) {
  if (!g.gradient) throw Error("elliptic_projection: analytic function has no gradient");
  Vector rhs = Vector::Zero(space.num_dofs());
  const int nen = space.nodes_per_element();
  for (const auto& el : space.elements()) {
    for (const auto& qp : el.quad) {
      const Eigen::Vector2d flux = a(qp.x) * g.gradient(qp.x);
      if (!flux.allFinite()) throw NonFiniteError("elliptic_projection: non-finite flux");
      for (int i = 0; i < nen; ++i)
        if (el.dofs[i] >= 0) rhs[el.dofs[i]] += qp.weight * flux.dot(el.grad[i]);
    }
  }
  const Factorization stiffness = factor_spd(assemble_stiffness(space, a));
  return stiffness.solve(rhs);
}

Vector interpolate(const FemSpace& space, const ScalarField& g) {
  const Mesh& mesh = space.mesh();
  Vector out(space.num_dofs());
  for (int d = 0; d < space.num_dofs(); ++d) out[d] = g(mesh.nodes[mesh.node_of_dof[d]]);
  return out;
}

double evaluate(const FemSpace& space, const Vector& u, const Point& x) {
  const Mesh& mesh = space.mesh();
  auto locate = [&](double coord, int axis, double& local) {
    const double s = coord / mesh.h[axis];
    int cell = static_cast<int>(std::floor(s));
    cell = std::clamp(cell, 0, mesh.cells[axis] - 1);
    local = std::clamp(s - cell, 0.0, 1.0);
    return cell;
  };
  double xi = 0.0;
  const int i = locate(x.x(), 0, xi);
  if (mesh.dim == 1) {
    return (1.0 - xi) * node_value(mesh, u, i) + xi * node_value(mesh, u, i + 1);
  }
  double eta = 0.0;
  const int j = locate(x.y(), 1, eta);
  const double u00 = node_value(mesh, u, mesh.node_index(i, j));
  const double u10 = node_value(mesh, u, mesh.node_index(i + 1, j));
  const double u01 = node_value(mesh, u, mesh.node_index(i, j + 1));
  const double u11 = node_value(mesh, u, mesh.node_index(i + 1, j + 1));
  if (eta <= xi) return (1.0 - xi) * u00 + (xi - eta) * u10 + eta * u11;
  return (1.0 - eta) * u00 + xi * u11 + (eta - xi) * u01;
}

Vector transfer(const FemSpace& from, const Vector& u, const FemSpace& to) {
  from.check_conforming(u, "transfer");
  const Mesh& mesh = to.mesh();
  Vector out(to.num_dofs());
  for (int d = 0; d < to.num_dofs(); ++d) out[d] = evaluate(from, u, mesh.nodes[mesh.node_of_dof[d]]);
  return out;
}

bool is_nested(const FemSpace& coarse, const FemSpace& fine) {
  const Mesh& c = coarse.mesh();
  const Mesh& f = fine.mesh();
  if (c.dim != f.dim) return false;
  for (int d = 0; d < c.dim; ++d) {
    if (std::abs(c.extents[d] - f.extents[d]) > 1e-12 * c.extents[d]) return false;
    if (f.cells[d] % c.cells[d] != 0) return false;
  }
  return true;
}

double l2_inner(const FemSpace& space, const Vector& x, const Vector& y) {
  space.check_conforming(x, "l2_inner");
  space.check_conforming(y, "l2_inner");
  return x.dot(space.mass() * y);
}

double l2_norm(const FemSpace& space, const Vector& x) { return std::sqrt(std::max(0.0, l2_inner(space, x, x))); }

double h1_seminorm_weighted(const SparseMatrix& stiffness, const Vector& x) {
  if (x.size() != stiffness.rows()) throw Error("h1_seminorm_weighted: dimension mismatch");
  return std::sqrt(std::max(0.0, x.dot(stiffness * x)));
}

void check_ellipticity(const FemSpace& space, const Problem& problem) {
  if (!problem.a) throw Error("problem: diffusion coefficient is missing");
  if (!(problem.a0 > 0.0)) throw Error("problem: ellipticity floor a0 must be positive");
  for (const auto& el : space.elements()) {
    for (const auto& qp : el.quad) {
      const Eigen::Matrix2d aq = problem.a(qp.x);
      double lowest = aq(0, 0);
      if (space.dim() == 2) {
        if (std::abs(aq(0, 1) - aq(1, 0)) > 1e-14 * std::max(1.0, aq.cwiseAbs().maxCoeff()))
          throw Error("problem: diffusion tensor is not symmetric");
        lowest = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(aq, Eigen::EigenvaluesOnly).eigenvalues()[0];
      }
      if (lowest < problem.a0 * (1.0 - 1e-12))
        throw Error("problem: diffusion tensor violates the ellipticity floor a0");
    }
  }
}

}  // namespace hisd
