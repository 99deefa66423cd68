#pragma once

// SO(3) helpers templated on the scalar type. Root orientation is stored in
// exponential coordinates phi (axis * angle), so the generalized velocity of
// the root rotation is d(phi)/dt and the world angular velocity is
// omega = J_l(phi) * d(phi)/dt with J_l the left Jacobian of SO(3).

#include <algorithm>
#include <cmath>
#include <numbers>

#include "msk/dual.hpp"
#include "msk/types.hpp"

namespace msk::rot {

template <class S>
Mat3<S> skew(const Vec3<S>& v) {
  Mat3<S> m;
  m << S(0.0), -v(2), v(1), v(2), S(0.0), -v(0), -v(1), v(0), S(0.0);
  return m;
}

namespace detail {

// Taylor coefficients in x = theta^2 used below the series threshold.
inline constexpr double kSeriesThreshold = 0.25;
inline constexpr int kSeriesTerms = 9;

// Sum_k sign^k x^k / (2k + offset)!, i.e. sin(t)/t (offset 1), (1-cos t)/t^2
// (offset 2), (t - sin t)/t^3 (offset 3).
template <class S>
S series(const S& x, int offset) {
  S sum(0.0);
  S power(1.0);
  double fact = 1.0;
  for (int i = 2; i <= offset; ++i) fact *= i;
  for (int k = 0; k < kSeriesTerms; ++k) {
    sum += ((k % 2 == 0) ? 1.0 : -1.0) * power / fact;
    power = power * x;
    fact *= static_cast<double>((2 * k + offset + 1) * (2 * k + offset + 2));
  }
  return sum;
}

// d/dx of series(x, offset).
template <class S>
S series_derivative(const S& x, int offset) {
  S sum(0.0);
  S power(1.0);
  double fact = 1.0;
  for (int i = 2; i <= offset + 2; ++i) fact *= i;
  for (int k = 1; k < kSeriesTerms; ++k) {
    sum += ((k % 2 == 0) ? 1.0 : -1.0) * static_cast<double>(k) * power / fact;
    power = power * x;
    fact *= static_cast<double>((2 * k + offset + 1) * (2 * k + offset + 2));
  }
  return sum;
}

}  // namespace detail

/// Coefficients of the Rodrigues / left-Jacobian expansions as functions of
/// x = |phi|^2: a = sin(t)/t, b = (1-cos t)/t^2, c = (t - sin t)/t^3, plus
/// db/dx and dc/dx.
template <class S>
struct ExpCoefficients {
  S a, b, c, db, dc;
};

template <class S>
ExpCoefficients<S> exp_coefficients(const S& x) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  ExpCoefficients<S> k;
  if (value_of(x) < detail::kSeriesThreshold) {
    k.a = detail::series(x, 1);
    k.b = detail::series(x, 2);
    k.c = detail::series(x, 3);
    k.db = detail::series_derivative(x, 2);
    k.dc = detail::series_derivative(x, 3);
  } else {
    const S t = sqrt(x);
    const S st = sin(t);
    const S ct = cos(t);
    k.a = st / t;
    k.b = (1.0 - ct) / x;
    k.c = (t - st) / (x * t);
    k.db = (k.a - 2.0 * k.b) / (2.0 * x);
    k.dc = (k.b - 3.0 * k.c) / (2.0 * x);
  }
  return k;
}

/// Rotation matrix of exponential coordinates phi.
template <class S>
Mat3<S> exp_map(const Vec3<S>& phi) {
  const auto k = exp_coefficients<S>(phi.dot(phi));
  const Mat3<S> K = skew<S>(phi);
  return Mat3<S>::Identity() + k.a * K + k.b * (K * K);
}

/// Left Jacobian: omega_world = J_l(phi) * phi_dot.
template <class S>
Mat3<S> left_jacobian(const Vec3<S>& phi) {
  const auto k = exp_coefficients<S>(phi.dot(phi));
  const Mat3<S> K = skew<S>(phi);
  return Mat3<S>::Identity() + k.b * K + k.c * (K * K);
}

/// Time derivative of J_l(phi(t)) given phi and phi_dot.
template <class S>
Mat3<S> left_jacobian_dot(const Vec3<S>& phi, const Vec3<S>& phi_dot) {
  const auto k = exp_coefficients<S>(phi.dot(phi));
  const S x_dot = 2.0 * phi.dot(phi_dot);
  const Mat3<S> K = skew<S>(phi);
  const Mat3<S> Kd = skew<S>(phi_dot);
  return (k.db * x_dot) * K + k.b * Kd + (k.dc * x_dot) * (K * K) + k.c * (Kd * K + K * Kd);
}

/// Rotation by `angle` about the unit vector `axis`.
template <class S>
Mat3<S> axis_angle(const Vec3<S>& axis, const S& angle) {
  using std::cos;
  using std::sin;
  const Mat3<S> K = skew<S>(axis);
  return Mat3<S>::Identity() + sin(angle) * K + (1.0 - cos(angle)) * (K * K);
}

/// Equivalent exponential coordinates with |phi| <= pi (same rotation).
template <class S>
Vec3<S> canonical(const Vec3<S>& phi) {
  using std::sqrt;
  const double theta = std::sqrt(value_of(phi.dot(phi)));
  if (theta <= std::numbers::pi) return phi;
  const double turns = std::round(theta / (2.0 * std::numbers::pi));
  const S norm = sqrt(phi.dot(phi));
  return phi * ((norm - 2.0 * std::numbers::pi * turns) / norm);
}

/// Logarithm of a rotation matrix (|result| <= pi).
inline Vector3d log_map(const Matrix3d& R) {
  const double cos_t = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double t = std::acos(cos_t);
  const Vector3d w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (t < 1e-6) return 0.5 * w;
  if (std::numbers::pi - t > 1e-6) return (t / (2.0 * std::sin(t))) * w;
  // Near pi: axis from the symmetric part.
  const Matrix3d B = 0.5 * (R + Matrix3d::Identity());
  int i = 0;
  B.diagonal().maxCoeff(&i);
  Vector3d axis = B.col(i) / std::sqrt(std::max(B(i, i), 1e-300));
  axis.normalize();
  if (axis.dot(w) < 0.0) axis = -axis;
  return t * axis;
}

}  // namespace msk::rot
