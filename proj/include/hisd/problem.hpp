#pragma once

#include <functional>

#include <Eigen/Core>

#include "hisd/types.hpp"

namespace hisd {

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Eigen::Vector2d(const Point&)>;
using MatrixField = std::function<Eigen::Matrix2d(const Point&)>;
using ScalarMap = std::function<double(double)>;

/// Semilinear advection-reaction-diffusion problem with homogeneous Dirichlet data:
///   div(a grad u) + b . grad u + c u + f(u) = 0.
/// Empty `b` / `c` mean the term is absent (the pure elliptic model).
struct Problem {
  int dim = 1;
  MatrixField a;
  VectorField b;
  ScalarField c;
  ScalarMap f;
  ScalarMap fprime;
  /// Ellipticity floor: w . a(x) w >= a0 |w|^2.
  double a0 = 1.0;

  bool has_advection() const { return static_cast<bool>(b); }
  bool has_reaction() const { return static_cast<bool>(c); }
  bool has_advection_reaction() const { return has_advection() || has_reaction(); }
};

/// A smooth function together with its gradient (needed by the elliptic projection).
struct AnalyticFunction {
  ScalarField value;
  VectorField gradient;
};

inline MatrixField constant_diffusion(double a) {
  return [a](const Point&) { return Eigen::Matrix2d(a * Eigen::Matrix2d::Identity()); };
}

inline MatrixField diagonal_diffusion(double ax, double ay) {
  return [ax, ay](const Point&) {
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    m(0, 0) = ax;
    m(1, 1) = ay;
    return m;
  };
}

}  // namespace hisd
