#pragma once

// Generic explicit one-step schemes over Eigen vectors. `f(t, x)` returns
// dx/dt.

#include <algorithm>
#include <cmath>
#include <string>

#include "msk/types.hpp"

namespace msk::detail {

template <class F, class V>
V rk4_step(F&& f, const V& x, double t, double dt) {
  const V k1 = f(t, x);
  const V k2 = f(t + 0.5 * dt, V(x + (0.5 * dt) * k1));
  const V k3 = f(t + 0.5 * dt, V(x + (0.5 * dt) * k2));
  const V k4 = f(t + dt, V(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Semi-implicit Euler for x = [q; qd] with dq/dt = qd: qd is advanced
/// first and the new qd moves q.
template <class F, class V>
V symplectic_euler_step(F&& f, const V& x, double t, double dt) {
  const Eigen::Index n = x.size() / 2;
  const V dx = f(t, x);
  V out(x.size());
  out.tail(n) = x.tail(n) + dt * dx.tail(n);
  out.head(n) = x.head(n) + dt * out.tail(n);
  return out;
}

struct AdaptiveTolerances {
  double rtol = 1e-8;
  double atol = 1e-10;
  double min_step = 1e-12;
};

/// Dormand-Prince 5(4) with local error control, returning x(t + dt).
/// Throws NumericalError when the step size falls below min_step.
template <class F>
VectorXd dopri5_interval(F&& f, const VectorXd& x0, double t, double dt, const AdaptiveTolerances& tol) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double t_end = t + dt;
  double tc = t;
  double h = dt;
  VectorXd x = x0;
  VectorXd k1 = f(tc, x);
  while (tc < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
    h = std::min(h, t_end - tc);
    if (h < tol.min_step) throw NumericalError("rk45 step size underflow at t=" + std::to_string(tc));
    const VectorXd k2 = f(tc + c2 * h, VectorXd(x + h * (a21 * k1)));
    const VectorXd k3 = f(tc + c3 * h, VectorXd(x + h * (a31 * k1 + a32 * k2)));
    const VectorXd k4 = f(tc + c4 * h, VectorXd(x + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const VectorXd k5 = f(tc + c5 * h, VectorXd(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const VectorXd k6 = f(tc + h, VectorXd(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const VectorXd xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const VectorXd k7 = f(tc + h, xn);
    const VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double sc = tol.atol + tol.rtol * std::max(std::abs(x(i)), std::abs(xn(i)));
      en = std::max(en, std::abs(err(i)) / sc);
    }
    if (!xn.allFinite() || !k7.allFinite() || !std::isfinite(en)) en = 1e10;
    if (en <= 1.0) {
      tc += h;
      x = xn;
      k1 = k7;
      h *= en > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2))) : 5.0;
    } else {
      h *= std::max(0.1, 0.9 * std::pow(en, -0.2));
    }
  }
  return x;
}

}  // namespace msk::detail
