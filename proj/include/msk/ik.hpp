#pragma once

// Marker-based inverse kinematics by Levenberg-Marquardt, and numerical
// differentiation of the recovered coordinate trajectories.

#include <string>
#include <vector>

#include "msk/model.hpp"

namespace msk {

struct MarkerFrame {
  double time = 0.0;
  std::vector<Vector3d> positions;  ///< one per model marker
  VectorXd weights;                 ///< empty = all ones
  std::vector<bool> present;        ///< empty = all present
};

struct IkOptions {
  bool enforce_limits = true;
  double gradient_tolerance = 1e-10;
  int max_iterations = 100;
  double initial_damping = 1e-3;
};

struct IkFrameResult {
  GeneralizedState state;
  /// sqrt(sum w |r|^2 / (3 sum w)) over present markers, metres.
  double rms_residual = 0.0;
  bool converged = false;
  bool observable = true;
  int iterations = 0;
  /// Objective value after every accepted iteration (first entry = initial).
  std::vector<double> objective_history;
};

struct IkSolution {
  std::vector<double> times;
  std::vector<GeneralizedState> states;  ///< qdot left zero
  std::vector<double> residuals;
  std::vector<bool> converged;
  std::vector<int> iterations;
};

/// True when every segment with a D-DoF inboard joint has at least D present
/// markers, and the (free) root segment has at least three.
bool is_observable(const SkeletonModel& model, const MarkerFrame& frame);

/// Minimizes sum w_m |marker_m(q) - x_m|^2 from q_init. Unobservable frames
/// are still solved (damped) but flagged non-converged.
IkFrameResult solve_ik_frame(const SkeletonModel& model, const MarkerFrame& frame, const GeneralizedState& q_init,
                             const IkOptions& options = {});

/// Frame t is warm-started from the last converged solution; the first
/// frame starts from the rest pose.
IkSolution solve_ik_sequence(const SkeletonModel& model, const std::vector<MarkerFrame>& frames,
                             const IkOptions& options = {});

struct DifferentiationOptions {
  /// Zero-phase low-pass (2nd-order Butterworth run forward and backward).
  bool smooth = false;
  double cutoff_hz = 6.0;
  /// Unwrap coordinates 3..5 as root exponential coordinates.
  bool unwrap_root = true;
};

struct DifferentiatedTrajectory {
  std::vector<VectorXd> q;  ///< unwrapped (and smoothed) positions
  std::vector<VectorXd> qdot;
  std::vector<VectorXd> qddot;
};

/// Central differences inside, one-sided (third-order for velocity,
/// second-order for acceleration) at the ends. Needs >= 3 frames.
DifferentiatedTrajectory differentiate_trajectory(const std::vector<VectorXd>& q, double dt,
                                                  const DifferentiationOptions& options = {});

/// Exponential coordinates equivalent to `phi` closest to `reference`.
Vector3d unwrap_rotation(const Vector3d& phi, const Vector3d& reference);

/// Zero-phase 2nd-order Butterworth low-pass applied forward and backward
/// (4th-order magnitude response), per column of `signal`.
std::vector<VectorXd> lowpass_filtfilt(const std::vector<VectorXd>& signal, double sample_rate_hz,
                                       double cutoff_hz);

}  // namespace msk
