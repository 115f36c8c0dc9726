#include "hisd/linalg.hpp"

#include <cmath>
#include <string>
#include <variant>

#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace hisd {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Cholesky = Eigen::SimplicialLLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
using LU = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;

}  // namespace

struct Factorization::Impl {
  std::variant<std::unique_ptr<Cholesky>, std::unique_ptr<LU>> solver;
};

double asymmetry(const SparseMatrix& a) {
  const SparseMatrix t = a.transpose();
  const SparseMatrix diff = a - t;
  double scale = 0.0;
  for (int k = 0; k < a.nonZeros(); ++k) scale = std::max(scale, std::abs(a.valuePtr()[k]));
  double worst = 0.0;
  for (int k = 0; k < diff.nonZeros(); ++k) worst = std::max(worst, std::abs(diff.valuePtr()[k]));
  return scale > 0.0 ? worst / scale : worst;
}

Factorization Factorization::spd(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw FactorizationError("factor_spd: matrix is not square");
  if (asymmetry(a) > 1e-12) throw FactorizationError("factor_spd: matrix is not symmetric");
  auto chol = std::make_unique<Cholesky>();
  chol->compute(ColMatrix(a));
  if (chol->info() != Eigen::Success)
    throw FactorizationError("factor_spd: Cholesky failed, matrix is not positive definite");
  Factorization f;
  auto impl = std::make_shared<Impl>();
  impl->solver = std::move(chol);
  f.impl_ = std::move(impl);
  f.n_ = static_cast<int>(a.rows());
  f.spd_ = true;
  return f;
}

Factorization Factorization::general(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw FactorizationError("factor_general: matrix is not square");
  ColMatrix col(a);
  col.makeCompressed();
  auto lu = std::make_unique<LU>();
  lu->analyzePattern(col);
  lu->factorize(col);
  if (lu->info() != Eigen::Success)
    throw FactorizationError("factor_general: LU failed (" + lu->lastErrorMessage() + ")");
  Factorization f;
  auto impl = std::make_shared<Impl>();
  impl->solver = std::move(lu);
  f.impl_ = std::move(impl);
  f.n_ = static_cast<int>(a.rows());
  f.spd_ = false;
  return f;
}

Vector Factorization::solve(const Vector& b) const {
  if (!impl_) throw FactorizationError("solve: empty factorization");
  if (b.size() != n_) throw Error("solve: right-hand side has wrong dimension");
  return std::visit([&](const auto& s) -> Vector { return s->solve(b); }, impl_->solver);
}

DenseMatrix Factorization::solve(const DenseMatrix& b) const {
  if (!impl_) throw FactorizationError("solve: empty factorization");
  if (b.rows() != n_) throw Error("solve: right-hand side has wrong dimension");
  return std::visit([&](const auto& s) -> DenseMatrix { return s->solve(b); }, impl_->solver);
}

Vector woodbury_solve(const Factorization& b_factor, const DenseMatrix& u, const DenseMatrix& w, const Vector& b) {
  const int n = b_factor.size();
  if (u.rows() != n || w.rows() != n || u.cols() != w.cols() || b.size() != n)
    throw Error("woodbury_solve: dimension mismatch");
  Vector x = b_factor.solve(b);
  const auto k = u.cols();
  if (k == 0) return x;

  const DenseMatrix binv_u = b_factor.solve(u);
  const DenseMatrix capacitance = DenseMatrix::Identity(k, k) - w.transpose() * binv_u;
  const Eigen::FullPivLU<DenseMatrix> cap_lu(capacitance);
  // rcond estimate from the pivots of the full-pivot LU.
  const auto diag = cap_lu.matrixLU().diagonal().cwiseAbs();
  const double smallest = diag.minCoeff();
  const double largest = std::max(diag.maxCoeff(), 1.0);
  if (!(smallest > 1e-13 * largest))
    throw FactorizationError(
        "woodbury_solve: capacitance matrix is singular to working precision; fall back to a direct "
        "general solve of B - U W^T");
  const Vector y = cap_lu.solve(w.transpose() * x);
  x += binv_u * y;
  return x;
}

}  // namespace hisd
