#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hisd {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// Compressed row storage over interior degrees of freedom.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
/// Spatial point; 1D problems only use the first coordinate.
using Point = Eigen::Vector2d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user callback produced a NaN or infinity during assembly.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace hisd
