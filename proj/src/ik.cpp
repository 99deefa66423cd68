#include "msk/ik.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "msk/kinematics.hpp"
#include "msk/rotation.hpp"

namespace msk {

namespace {

void check_frame(const SkeletonModel& model, const MarkerFrame& frame) {
  const auto M = static_cast<std::size_t>(model.marker_count());
  if (frame.positions.size() != M)
    throw DimensionError("marker frame has " + std::to_string(frame.positions.size()) + " markers, model expects " +
                         std::to_string(M));
  if (frame.weights.size() != 0 && frame.weights.size() != model.marker_count())
    throw DimensionError("marker weights have wrong dimension");
  if (!frame.present.empty() && frame.present.size() != M)
    throw DimensionError("missing-marker mask has wrong dimension");
  if (frame.weights.size() != 0 && (frame.weights.array() < 0.0).any())
    throw ValidationError("marker weights must be nonnegative");
}

bool present(const MarkerFrame& f, int m) {
  return (f.present.empty() || f.present[m]) && f.positions[m].allFinite();
}
double weight(const MarkerFrame& f, int m) { return f.weights.size() ? f.weights(m) : 1.0; }

// Coordinates solved by IK: all of them, or only the joint block when the
// root is locked.
int first_free(const SkeletonModel& model) { return model.root_locked() ? 6 : 0; }

struct Residual {
  VectorXd r;     // weighted, 3 per marker slot (zero when absent)
  double cost;    // 0.5 |r|^2
  double wsum;    // sum of weights over present markers
};

Residual residual(const SkeletonModel& model, const MarkerFrame& frame, const VectorXd& q) {
  const auto x = marker_positions(model, {q, VectorXd::Zero(model.dof())});
  Residual out{VectorXd::Zero(3 * model.marker_count()), 0.0, 0.0};
  for (int m = 0; m < model.marker_count(); ++m) {
    if (!present(frame, m)) continue;
    const double w = weight(frame, m);
    out.r.segment<3>(3 * m) = std::sqrt(w) * (x[m] - frame.positions[m]);
    out.wsum += w;
  }
  out.cost = 0.5 * out.r.squaredNorm();
  return out;
}

MatrixXd weighted_jacobian(const SkeletonModel& model, const MarkerFrame& frame, const VectorXd& q) {
  MatrixXd J = marker_jacobian(model, {q, VectorXd::Zero(model.dof())});
  for (int m = 0; m < model.marker_count(); ++m) {
    if (!present(frame, m))
      J.middleRows<3>(3 * m).setZero();
    else
      J.middleRows<3>(3 * m) *= std::sqrt(weight(frame, m));
  }
  return J.rightCols(model.dof() - first_free(model));
}

void project(const SkeletonModel& model, VectorXd& q) {
  q = q.cwiseMax(model.lower_limits()).cwiseMin(model.upper_limits());
}

// Gradient with components pushing into active bounds removed.
VectorXd projected_gradient(const SkeletonModel& model, const VectorXd& q, const VectorXd& g, bool limits) {
  VectorXd pg = g;
  if (!limits) return pg;
  const int off = first_free(model);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double lo = model.lower_limits()(off + i), hi = model.upper_limits()(off + i);
    if (q(off + i) <= lo && g(i) > 0.0) pg(i) = 0.0;
    if (q(off + i) >= hi && g(i) < 0.0) pg(i) = 0.0;
  }
  return pg;
}

double rms(const Residual& r) { return r.wsum > 0.0 ? std::sqrt(r.r.squaredNorm() / (3.0 * r.wsum)) : 0.0; }

}  // namespace

bool is_observable(const SkeletonModel& model, const MarkerFrame& frame) {
  check_frame(model, frame);
  std::vector<int> count(model.segment_count(), 0);
  for (int m = 0; m < model.marker_count(); ++m)
    if (present(frame, m) && weight(frame, m) > 0.0) ++count[model.marker_segment(m)];
  if (!model.root_locked() && count[0] < 3) return false;
  for (int i = 1; i < model.segment_count(); ++i)
    if (count[i] < model.joints()[model.inboard_joint(i)].dof_count) return false;
  return true;
}

IkFrameResult solve_ik_frame(const SkeletonModel& model, const MarkerFrame& frame, const GeneralizedState& q_init,
                             const IkOptions& options) {
  check_frame(model, frame);
  check_dimensions(model, q_init);
  IkFrameResult out;
  out.observable = is_observable(model, frame);
  const int off = first_free(model);
  const int nv = model.dof() - off;

  VectorXd q = q_init.q;
  if (options.enforce_limits) project(model, q);
  Residual res = residual(model, frame, q);
  out.objective_history.push_back(res.cost);
  double lambda = options.initial_damping;
  bool converged = false;
  int it = 0;
  MatrixXd J = weighted_jacobian(model, frame, q);
  VectorXd g = J.transpose() * res.r;
  while (it < options.max_iterations) {
    if (projected_gradient(model, q, g, options.enforce_limits).norm() < options.gradient_tolerance) {
      converged = true;
      break;
    }
    ++it;
    const MatrixXd H = J.transpose() * J;
    bool accepted = false;
    while (lambda < 1e12) {
      MatrixXd A = H;
      A.diagonal().array() += lambda;
      const VectorXd dq = A.ldlt().solve(-g);
      VectorXd trial = q;
      trial.tail(nv) += dq;
      if (options.enforce_limits) project(model, trial);
      const Residual rt = residual(model, frame, trial);
      if (rt.cost < res.cost) {
        q = trial;
        res = rt;
        lambda = std::max(lambda * 0.5, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No decrease available at working precision: a stationary point.
      converged = projected_gradient(model, q, g, options.enforce_limits).norm() <
                  1e-6 * std::max(1.0, std::sqrt(2.0 * res.cost));
      break;
    }
    out.objective_history.push_back(res.cost);
    J = weighted_jacobian(model, frame, q);
    g = J.transpose() * res.r;
  }
  if (!converged && it >= options.max_iterations)
    converged = projected_gradient(model, q, g, options.enforce_limits).norm() < options.gradient_tolerance;

  GeneralizedState st{q, VectorXd::Zero(model.dof())};
  out.state = canonicalize(st);
  out.iterations = it;
  out.rms_residual = rms(res);
  out.converged = converged && out.observable;
  return out;
}

IkSolution solve_ik_sequence(const SkeletonModel& model, const std::vector<MarkerFrame>& frames,
                             const IkOptions& options) {
  for (std::size_t k = 1; k < frames.size(); ++k)
    if (frames[k].time < frames[k - 1].time) throw ValidationError("marker frames must be time-sorted");
  IkSolution sol;
  GeneralizedState warm = GeneralizedState::zero(model);
  for (const auto& f : frames) {
    const auto r = solve_ik_frame(model, f, warm, options);
    sol.times.push_back(f.time);
    sol.states.push_back(r.state);
    sol.residuals.push_back(r.rms_residual);
    sol.converged.push_back(r.converged);
    sol.iterations.push_back(r.iterations);
    if (r.converged) warm = r.state;
  }
  return sol;
}

Vector3d unwrap_rotation(const Vector3d& phi, const Vector3d& reference) {
  const double theta = phi.norm();
  Vector3d axis;
  if (theta > 1e-12) {
    axis = phi / theta;
  } else {
    const double rn = reference.norm();
    if (rn < 1e-12) return phi;
    axis = reference / rn;
  }
  Vector3d best = phi;
  double best_d = (phi - reference).norm();
  const double two_pi = 2.0 * std::numbers::pi;
  const double turns = std::round(reference.norm() / two_pi);
  for (double n = turns - 2; n <= turns + 2; n += 1.0) {
    for (double sign : {1.0, -1.0}) {
      const Vector3d c = (theta + sign * two_pi * n) * axis;
      const double d = (c - reference).norm();
      if (d < best_d - 1e-15) {
        best_d = d;
        best = c;
      }
    }
  }
  return best;
}

std::vector<VectorXd> lowpass_filtfilt(const std::vector<VectorXd>& signal, double sample_rate_hz,
                                       double cutoff_hz) {
  const std::size_t N = signal.size();
  if (N < 2) return signal;
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate_hz))
    throw ValidationError("low-pass cutoff must lie in (0, Nyquist)");
  // Two passes of a 2nd-order filter: correct the cutoff so the combined
  // -3 dB point stays at cutoff_hz.
  const double correction = std::pow(std::sqrt(2.0) - 1.0, 0.25);
  const double fc = std::min(cutoff_hz / correction, 0.45 * sample_rate_hz);
  const double K = std::tan(std::numbers::pi * fc / sample_rate_hz);
  const double norm = 1.0 / (1.0 + std::sqrt(2.0) * K + K * K);
  const double b0 = K * K * norm, b1 = 2.0 * b0, b2 = b0;
  const double a1 = 2.0 * (K * K - 1.0) * norm, a2 = (1.0 - std::sqrt(2.0) * K + K * K) * norm;

  const std::size_t pad = std::min<std::size_t>(N - 1, 3 * 3);
  auto run = [&](std::vector<double>& x) {
    double z1 = (b1 - a1) * x[0] + (b2 - a2) * x[0], z2 = (b2 - a2) * x[0];
    for (double& v : x) {
      const double in = v;
      const double y = b0 * in + z1;
      z1 = b1 * in - a1 * y + z2;
      z2 = b2 * in - a2 * y;
      v = y;
    }
  };
  const Eigen::Index cols = signal[0].size();
  std::vector<VectorXd> out(N, VectorXd(cols));
  std::vector<double> x(N + 2 * pad);
  for (Eigen::Index c = 0; c < cols; ++c) {
    // Odd reflection about the end samples.
    for (std::size_t i = 0; i < pad; ++i) {
      x[i] = 2.0 * signal[0](c) - signal[pad - i](c);
      x[pad + N + i] = 2.0 * signal[N - 1](c) - signal[N - 2 - i](c);
    }
    for (std::size_t i = 0; i < N; ++i) x[pad + i] = signal[i](c);
    run(x);
    std::reverse(x.begin(), x.end());
    run(x);
    std::reverse(x.begin(), x.end());
    for (std::size_t i = 0; i < N; ++i) out[i](c) = x[pad + i];
  }
  return out;
}

DifferentiatedTrajectory differentiate_trajectory(const std::vector<VectorXd>& q, double dt,
                                                  const DifferentiationOptions& options) {
  const std::size_t N = q.size();
  if (N < 3) throw ValidationError("differentiation needs at least 3 frames, got " + std::to_string(N));
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  for (const auto& v : q)
    if (v.size() != q[0].size()) throw DimensionError("trajectory frames have inconsistent dimensions");

  DifferentiatedTrajectory out;
  out.q = q;
  if (options.unwrap_root && q[0].size() >= 6)
    for (std::size_t k = 1; k < N; ++k)
      out.q[k].segment<3>(3) = unwrap_rotation(out.q[k].segment<3>(3), out.q[k - 1].segment<3>(3));
  if (options.smooth) out.q = lowpass_filtfilt(out.q, 1.0 / dt, options.cutoff_hz);

  const auto& x = out.q;
  out.qdot.resize(N);
  out.qddot.resize(N);
  for (std::size_t k = 1; k + 1 < N; ++k) {
    out.qdot[k] = (x[k + 1] - x[k - 1]) / (2.0 * dt);
    out.qddot[k] = (x[k + 1] - 2.0 * x[k] + x[k - 1]) / (dt * dt);
  }
  // End stencils written in differences so constants give exact zeros.
  if (N >= 4) {
    const VectorXd d1 = x[1] - x[0], d2 = x[2] - x[0], d3 = x[3] - x[0];
    const VectorXd e1 = x[N - 2] - x[N - 1], e2 = x[N - 3] - x[N - 1], e3 = x[N - 4] - x[N - 1];
    out.qdot[0] = (18.0 * d1 - 9.0 * d2 + 2.0 * d3) / (6.0 * dt);
    out.qdot[N - 1] = -(18.0 * e1 - 9.0 * e2 + 2.0 * e3) / (6.0 * dt);
    out.qddot[0] = (-5.0 * d1 + 4.0 * d2 - d3) / (dt * dt);
    out.qddot[N - 1] = (-5.0 * e1 + 4.0 * e2 - e3) / (dt * dt);
  } else {
    out.qdot[0] = (4.0 * (x[1] - x[0]) - (x[2] - x[0])) / (2.0 * dt);
    out.qdot[2] = -(4.0 * (x[1] - x[2]) - (x[0] - x[2])) / (2.0 * dt);
    out.qddot[0] = out.qddot[2] = out.qddot[1];
  }
  return out;
}

}  // namespace msk
