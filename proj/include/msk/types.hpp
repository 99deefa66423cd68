#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

namespace msk {

template <class S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <class S>
using Mat3 = Eigen::Matrix<S, 3, 3>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A model, state or problem violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes do not match the model layout.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical breakdown (non-SPD mass matrix, step-size underflow, NaN).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace msk
