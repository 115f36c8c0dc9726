#include "hisd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hisd/linalg.hpp"

namespace hisd {

HessianOperator assemble_hessian(const FemSpace& space, const Problem& problem, const Vector& u) {
  space.check_conforming(u, "assemble_hessian");
  HessianOperator h;
  h.mass = space.mass();
  h.matrix = assemble_stiffness(space, problem.a) - assemble_weighted_mass(space, u, problem.fprime);
  if (problem.has_advection_reaction()) h.matrix -= assemble_advection_reaction(space, problem.b, problem.c);
  h.symmetric = !problem.has_advection() && asymmetry(h.matrix) <= 1e-12;

  double top = -std::numeric_limits<double>::infinity();
  const int nel = static_cast<int>(space.elements().size());
  for (int e = 0; e < nel; ++e) {
    for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
      double g = problem.fprime(space.value_at(u, e, q));
      if (problem.has_reaction()) g += problem.c(space.elements()[e].quad[q].x);
      top = std::max(top, g);
    }
  }
  h.lower_bound = std::isfinite(top) ? -top : 0.0;
  return h;
}

namespace {

Factorization factor_shifted(const HessianOperator& h, double& shift) {
  for (int attempt = 0; attempt < 6; ++attempt) {
    const SparseMatrix a = h.matrix - shift * h.mass;
    try {
      if (h.symmetric) {
        try {
          return factor_spd(a);
        } catch (const FactorizationError&) {
          // Shift above the left edge: fall through to LU, which still inverts.
        }
      }
      return factor_general(a);
    } catch (const FactorizationError&) {
      shift -= 1.0 + 0.1 * std::abs(shift);
    }
  }
  throw FactorizationError("smallest_eigenpairs: shifted matrix singular for every tried shift");
}

// Appends the columns of `block` to the M-orthonormal basis q (two passes of
// classical Gram-Schmidt); columns that vanish after projection are dropped.
void extend_basis(DenseMatrix& q, int& cols, const SparseMatrix& m, const DenseMatrix& block) {
  for (int j = 0; j < block.cols(); ++j) {
    Vector x = block.col(j);
    const double start = std::sqrt(std::max(0.0, x.dot(m * x)));
    if (!(start > 0.0)) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (cols == 0) break;
      const Vector mx = m * x;
      const Vector coef = q.leftCols(cols).transpose() * mx;
      x -= q.leftCols(cols) * coef;
    }
    const double norm = std::sqrt(std::max(0.0, x.dot(m * x)));
    if (norm <= 1e-10 * start) continue;
    q.col(cols++) = x / norm;
  }
}

void normalize_sign(Vector& x) {
  Eigen::Index arg = 0;
  x.cwiseAbs().maxCoeff(&arg);
  if (x[arg] < 0.0) x = -x;
}

double residual_of(const HessianOperator& h, double lambda, const Vector& x) {
  const double norm = std::sqrt(std::max(0.0, x.dot(h.mass * x)));
  if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
  return (h.matrix * x - lambda * (h.mass * x)).norm() / norm;
}

// Ritz pairs of the pencil restricted to span(q), sorted by real part.
void ritz(const HessianOperator& h, const DenseMatrix& q, std::vector<double>& values, DenseMatrix& vectors) {
  const DenseMatrix hq = q.transpose() * (h.matrix * q);
  const int s = static_cast<int>(hq.rows());
  values.assign(s, 0.0);
  DenseMatrix z(s, s);
  if (h.symmetric) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (hq + hq.transpose()));
    for (int i = 0; i < s; ++i) values[i] = es.eigenvalues()[i];
    z = es.eigenvectors();
  } else {
    Eigen::EigenSolver<DenseMatrix> es(hq);
    std::vector<int> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return es.eigenvalues()[a].real() < es.eigenvalues()[b].real(); });
    for (int i = 0; i < s; ++i) {
      values[i] = es.eigenvalues()[order[i]].real();
      z.col(i) = es.eigenvectors().col(order[i]).real();
      if (z.col(i).norm() == 0.0) z.col(i) = es.eigenvectors().col(order[i]).imag();
    }
  }
  vectors = q * z;
}

Spectrum dense_spectrum(const HessianOperator& h, int m) {
  const DenseMatrix hd(h.matrix);
  const DenseMatrix md(h.mass);
  Spectrum out;
  std::vector<double> values;
  DenseMatrix vectors;
  if (h.symmetric) {
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(0.5 * (hd + hd.transpose()), md);
    values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    vectors = es.eigenvectors();
  } else {
    // M = L L^T turns the pencil into a standard problem for L^{-1} H L^{-T}.
    Eigen::LLT<DenseMatrix> llt(md);
    const DenseMatrix l_inv = llt.matrixL().solve(DenseMatrix::Identity(md.rows(), md.cols()));
    ritz(h, l_inv.transpose(), values, vectors);
  }
  for (int i = 0; i < m; ++i) {
    Vector x = vectors.col(i);
    x /= std::sqrt(x.dot(h.mass * x));
    normalize_sign(x);
    out.values.push_back(values[i]);
    out.vectors.push_back(std::move(x));
    out.max_residual = std::max(out.max_residual, residual_of(h, values[i], out.vectors.back()));
  }
  return out;
}

}  // namespace

Spectrum smallest_eigenpairs(const HessianOperator& h, int m, std::optional<double> shift,
                             const EigenOptions& options) {
  const int n = static_cast<int>(h.matrix.rows());
  if (m < 1) throw Error("smallest_eigenpairs: m must be at least 1");
  if (m > n) throw Error("smallest_eigenpairs: requested " + std::to_string(m) + " eigenpairs of a size-" +
                         std::to_string(n) + " problem");
  const int block = std::min(n, m + options.guard_vectors);
  if (3 * block >= n) {
    Spectrum s = dense_spectrum(h, m);
    s.shift = shift.value_or(h.lower_bound - 1.0);
    return s;
  }

  double sigma = shift.value_or(h.lower_bound - 1.0);
  const Factorization f = factor_shifted(h, sigma);

  // Deterministic start block.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix x(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = dist(rng);

  Spectrum out;
  out.shift = sigma;
  std::vector<double> values;
  DenseMatrix vectors;
  double worst = std::numeric_limits<double>::infinity();
  double previous_worst = worst;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const DenseMatrix y1 = f.solve(DenseMatrix(h.mass * x));
    const DenseMatrix y2 = f.solve(DenseMatrix(h.mass * y1));
    DenseMatrix q(n, 3 * block);
    int cols = 0;
    extend_basis(q, cols, h.mass, x);
    extend_basis(q, cols, h.mass, y1);
    extend_basis(q, cols, h.mass, y2);
    if (cols < m) throw Error("smallest_eigenpairs: Krylov basis collapsed");
    ritz(h, q.leftCols(cols), values, vectors);

    const int keep = std::min(block, cols);
    x = vectors.leftCols(keep);
    worst = 0.0;
    for (int i = 0; i < m; ++i) worst = std::max(worst, residual_of(h, values[i], x.col(i)));
    out.iterations = it;
    if (worst <= options.tol) break;
    // Rounding floor: accept a stagnated residual inside the hard bound.
    if (worst <= options.accept_tol && worst > 0.5 * previous_worst) break;
    previous_worst = worst;
    if (it == options.max_iterations) {
      std::ostringstream msg;
      msg << "smallest_eigenpairs: no convergence after " << it << " iterations (residual " << worst << ")";
      throw Error(msg.str());
    }
  }
  for (int i = 0; i < m; ++i) {
    Vector v = x.col(i);
    v /= std::sqrt(v.dot(h.mass * v));
    normalize_sign(v);
    out.values.push_back(values[i]);
    out.max_residual = std::max(out.max_residual, residual_of(h, values[i], v));
    out.vectors.push_back(std::move(v));
  }
  return out;
}

double default_zero_tol(const Spectrum& spectrum) {
  double scale = 0.0;
  for (double v : spectrum.values) scale = std::max(scale, std::abs(v));
  return 1e-8 * (scale > 0.0 ? scale : 1.0);
}

MorseIndex morse_index(const Spectrum& spectrum, double zero_tol) {
  if (spectrum.values.empty() || !(spectrum.values.back() > zero_tol)) {
    std::ostringstream msg;
    msg << "morse_index: the largest of the " << spectrum.values.size()
        << " computed eigenvalues does not exceed zero_tol " << zero_tol
        << "; request more eigenpairs (larger m)";
    throw Error(msg.str());
  }
  MorseIndex r;
  r.zero_tol = zero_tol;
  for (double v : spectrum.values) {
    if (v < -zero_tol) ++r.index;
    else if (v <= zero_tol) ++r.near_zero;
  }
  return r;
}

MorseIndex morse_index(const Spectrum& spectrum) { return morse_index(spectrum, default_zero_tol(spectrum)); }

Spectrum spectrum_window(const HessianOperator& h, int m, int max_m) {
  const int n = static_cast<int>(h.matrix.rows());
  m = std::max(1, std::min(m, n));
  for (;;) {
    Spectrum s = smallest_eigenpairs(h, m);
    if (s.values.back() > default_zero_tol(s) || m >= n) return s;
    if (m >= max_m) throw Error("spectrum_window: no positive eigenvalue among the smallest " + std::to_string(m));
    m = std::min({2 * m, max_m, n});
  }
}

}  // namespace hisd
