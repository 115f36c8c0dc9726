#pragma once

#include <memory>

#include "hisd/types.hpp"

namespace hisd {

class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Immutable sparse factorization: Cholesky on the SPD path, LU otherwise.
/// Copies share the factor; concurrent solves are safe.
class Factorization {
 public:
  Factorization() = default;

  /// Throws FactorizationError if A is not symmetric or not positive definite.
  static Factorization spd(const SparseMatrix& a);
  /// Throws FactorizationError if A is (numerically) singular.
  static Factorization general(const SparseMatrix& a);

  Vector solve(const Vector& b) const;
  DenseMatrix solve(const DenseMatrix& b) const;

  int size() const { return n_; }
  bool is_spd() const { return spd_; }
  bool empty() const { return !impl_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  int n_ = 0;
  bool spd_ = false;
};

inline Factorization factor_spd(const SparseMatrix& a) { return Factorization::spd(a); }
inline Factorization factor_general(const SparseMatrix& a) { return Factorization::general(a); }
inline Vector solve(const Factorization& f, const Vector& b) { return f.solve(b); }

/// Solves (B - U W^T) x = b given a factorization of B, via the k x k capacitance
/// system I - W^T B^{-1} U. Throws FactorizationError when the capacitance
/// matrix is singular to working precision.
Vector woodbury_solve(const Factorization& b_factor, const DenseMatrix& u, const DenseMatrix& w, const Vector& b);

/// max |A_ij - A_ji| relative to max |A_ij|.
double asymmetry(const SparseMatrix& a);

}  // namespace hisd
