#pragma once

// Direct-collocation optimal control that turns reference kinematics into
// reference kinetics: trapezoidal defects, a tracking-plus-effort objective
// and an augmented-Lagrangian penalty solver with a projected
// Levenberg-Marquardt inner loop.

#include <string>
#include <vector>

#include "msk/dynamics.hpp"
#include "msk/model.hpp"

namespace msk {

struct OcpWeights {
  double effort = 1e-3;  ///< w1 on |e|^2 (excitations and normalized motor controls)
  double q = 1.0;        ///< w2
  double qdot = 1e-1;    ///< w3
  double qddot = 1e-3;   ///< w4

  /// Parses "w1,w2,w3,w4".
  static OcpWeights parse(const std::string& text);
};

struct OcpSolverOptions {
  double defect_tolerance = 1e-6;
  int max_outer_iterations = 30;
  int max_inner_iterations = 200;
  /// Inner solves stop after two accepted steps that each reduce the merit
  /// by less than this fraction.
  double relative_decrease = 1e-6;
  double initial_penalty = 1e2;
  double penalty_growth = 10.0;
  double max_penalty = 1e12;
};

struct OcpProblem {
  OcpProblem(SkeletonModel model) : model(std::move(model)) {}

  SkeletonModel model;
  std::vector<double> times;  ///< uniform grid, >= 2 knots
  std::vector<VectorXd> q_ref, qdot_ref, qddot_ref;
  OcpWeights weights;
  /// Contact enforcement inside the dynamics (none or automatic).
  ContactInput::Mode contact = ContactInput::Mode::automatic;
  /// Optional initial guess; defaults to the reference states and zero
  /// controls.
  std::vector<VectorXd> state_guess, control_guess;
  OcpSolverOptions solver;

  int knots() const { return static_cast<int>(times.size()); }
  /// Controls per knot: muscle excitations then one motor per actuated DoF.
  int control_count() const;
  /// Throws ValidationError / DimensionError.
  void validate() const;
};

/// Generalized torque produced by a control vector u at state (q, qdot):
/// muscle torques for u[0..Nm) plus bound * u for the actuated DoFs.
VectorXd control_torque(const SkeletonModel& model, const VectorXd& u, const GeneralizedState& state);

/// Lower/upper bounds of a control vector ([0,1] excitations, [-1,1] motors).
VectorXd control_lower(const SkeletonModel& model);
VectorXd control_upper(const SkeletonModel& model);

struct ObjectiveBreakdown {
  double effort = 0.0;
  double q = 0.0;
  double qdot = 0.0;
  double qddot = 0.0;
  double total() const { return effort + q + qdot + qddot; }
};

/// The transcribed nonlinear program.
class Transcription {
 public:
  explicit Transcription(const OcpProblem& problem);

  int decision_size() const { return N_ * (2 * d_ + m_); }
  int defect_size() const { return (N_ - 1) * 2 * d_; }
  int state_size() const { return 2 * d_; }
  int control_size() const { return m_; }

  /// z = [x_0 .. x_{N-1}, u_0 .. u_{N-1}].
  VectorXd pack(const std::vector<VectorXd>& states, const std::vector<VectorXd>& controls) const;
  VectorXd state(const VectorXd& z, int k) const { return z.segment(2 * d_ * k, 2 * d_); }
  VectorXd control(const VectorXd& z, int k) const { return z.segment(2 * d_ * N_ + m_ * k, m_); }

  /// Defects x_{k+1} - x_k - h/2 (f_k + f_{k+1}).
  VectorXd defects(const VectorXd& z) const;
  ObjectiveBreakdown objective(const VectorXd& z) const;
  /// Dynamics right-hand side at knot k of z.
  VectorXd rhs(const VectorXd& z, int k) const;
  /// Jacobians of rhs(z, k) with respect to the knot state (A) and knot
  /// controls (B).
  void rhs_jacobian(const VectorXd& z, int k, MatrixXd& A, MatrixXd& B) const;

  /// Control boxes; a locked root is pinned to the first reference pose.
  VectorXd lower_bounds() const;
  VectorXd upper_bounds() const;
  const OcpProblem& problem() const { return p_; }

 private:
  void pin_locked_root(VectorXd& bound) const;

  const OcpProblem& p_;
  int N_, d_, m_;
};

enum class OcpStatus { converged, max_iterations, stalled };
std::string to_string(OcpStatus status);

struct OcpSolution {
  std::vector<double> times;
  std::vector<GeneralizedState> states;
  std::vector<VectorXd> controls;
  /// Total generalized torque (muscles + motors) per knot.
  std::vector<VectorXd> tau;
  /// Total contact force per knot.
  std::vector<Vector3d> lambda;
  double objective = 0.0;
  ObjectiveBreakdown breakdown;
  double max_defect = 0.0;
  OcpStatus status = OcpStatus::stalled;
  int outer_iterations = 0;
  int inner_iterations = 0;
  /// Merit values of the accepted inner iterates, one list per outer
  /// iteration (the multipliers and penalty are fixed within a list).
  std::vector<std::vector<double>> merit_history;
};

/// Throws NumericalError naming the knot when dynamics evaluate to NaN.
OcpSolution solve_ocp(const OcpProblem& problem);

struct ReferenceKinetics {
  std::vector<double> times;
  std::vector<KineticState> kinetics;  ///< tau over rotational DoFs
  std::vector<VectorXd> tau_full;      ///< all coordinates
};

/// tau~ = muscle torques + motors and lambda~ = contact forces along the
/// solution.
ReferenceKinetics extract_reference_kinetics(const OcpProblem& problem, const OcpSolution& solution);

}  // namespace msk
