#pragma once

#include <optional>
#include <vector>

#include "hisd/fem.hpp"
#include "hisd/problem.hpp"

namespace hisd {

/// Hessian of the energy at u as a generalized pencil (H, M), with
/// H = A - G - W(f'(u)). G is the advection-reaction matrix when present.
struct HessianOperator {
  SparseMatrix matrix;
  SparseMatrix mass;
  bool symmetric = true;
  /// Guaranteed lower bound for the real parts of the spectrum when symmetric:
  /// -max(f'(u) + c) over quadrature points.
  double lower_bound = 0.0;
};

HessianOperator assemble_hessian(const FemSpace& space, const Problem& problem, const Vector& u);

/// Smallest generalized eigenpairs sorted ascending by (real part of) value.
/// Eigenvectors are M-normalized; for the nonsymmetric pencil they are real
/// parts of Ritz vectors and carry no orthogonality guarantee.
struct Spectrum {
  std::vector<double> values;
  std::vector<Vector> vectors;
  /// max_i |H x_i - lambda_i M x_i|_2 / |x_i|_M.
  double max_residual = 0.0;
  double shift = 0.0;
  int iterations = 0;

  int size() const { return static_cast<int>(values.size()); }
};

struct EigenOptions {
  /// Target residual; a stagnated residual below accept_tol is also accepted.
  double tol = 1e-9;
  double accept_tol = 1e-8;
  int max_iterations = 300;
  /// Extra block columns beyond the requested count.
  int guard_vectors = 6;
};

/// Shift-invert block Krylov iteration with Rayleigh-Ritz extraction.
/// `shift` defaults to lower_bound - 1. A singular shifted matrix is retried
/// with a lowered shift; non-convergence throws.
Spectrum smallest_eigenpairs(const HessianOperator& h, int m, std::optional<double> shift = std::nullopt,
                             const EigenOptions& options = {});

struct MorseIndex {
  int index = 0;
  /// Eigenvalues within [-zero_tol, zero_tol].
  int near_zero = 0;
  double zero_tol = 0.0;
};

/// 1e-8 times the largest |eigenvalue| in the spectrum (1e-8 if empty or zero).
double default_zero_tol(const Spectrum& spectrum);

/// Counts eigenvalues below -zero_tol. Throws when the spectrum does not reach
/// above zero_tol, since then more negative eigenvalues could be missing.
MorseIndex morse_index(const Spectrum& spectrum, double zero_tol);
MorseIndex morse_index(const Spectrum& spectrum);

/// Requests m, 2m, ... eigenpairs until the window reaches positive values.
Spectrum spectrum_window(const HessianOperator& h, int m, int max_m = 256);

}  // namespace hisd
