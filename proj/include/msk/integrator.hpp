#pragma once

// Forward-dynamics ODE  d/dt [q; qd] = [qd; M^-1 (J_C^T lambda + tau - C - g)]
// with fixed-step RK4, semi-implicit Euler and adaptive Dormand-Prince 5(4)
// solvers, plus forward-mode directional sensitivities of rollouts.

#include <optional>
#include <string>
#include <vector>

#include "msk/dynamics.hpp"
#include "msk/model.hpp"

namespace msk {

enum class Method { rk4, rk45, semi_implicit_euler };
enum class Interpolation { zero_order_hold, linear };

/// Parses "rk4" | "rk45" | "euler" / "semi_implicit_euler".
Method parse_method(const std::string& name);
std::string to_string(Method method);

/// Stacks a state into x = [q; qdot] and back.
VectorXd to_ode_state(const GeneralizedState& state);
GeneralizedState from_ode_state(const VectorXd& x);

/// Time-indexed generalized forces (all dof entries per knot) and contact
/// specification.
struct ControlTrajectory {
  std::vector<double> times;
  std::vector<VectorXd> tau;
  ContactInput::Mode contact = ContactInput::Mode::automatic;
  /// Per-knot stacked sphere forces when contact == prescribed.
  std::vector<VectorXd> sphere_forces;
  Interpolation interpolation = Interpolation::zero_order_hold;

  /// A single knot at t = 0 holding `tau` for all time.
  static ControlTrajectory constant(VectorXd tau, ContactInput::Mode contact = ContactInput::Mode::automatic);

  /// Throws ValidationError / DimensionError on a malformed trajectory.
  void validate(const SkeletonModel& model) const;
};

struct IntegratorOptions {
  Method method = Method::rk4;
  double rtol = 1e-8;       ///< rk45 only
  double atol = 1e-10;      ///< rk45 only
  double min_step = 1e-12;  ///< rk45 step-size underflow threshold
  /// Keep |R| <= pi after every step.
  bool canonicalize = true;
};

/// [qd; forward_dynamics(q, qd, tau, lambda)].
VectorXd ode_rhs(const SkeletonModel& model, const VectorXd& x, const VectorXd& tau, const ContactInput& contact);

/// Advances x from t to t + dt under `controls`. Throws NumericalError on
/// rk45 step-size underflow or non-finite states.
VectorXd step(const SkeletonModel& model, const VectorXd& x, const ControlTrajectory& controls, double t, double dt,
              const IntegratorOptions& options = {});

struct Trajectory {
  std::vector<double> times;
  std::vector<GeneralizedState> states;
  /// Accelerations at each knot under the control active at that knot.
  std::vector<VectorXd> qddot;

  std::size_t size() const { return states.size(); }
};

struct RolloutResult {
  Trajectory trajectory;
  bool ok = true;
  std::string error;
  std::optional<double> failure_time;
};

/// Integrates from x0 over [0, horizon] recording every dt. On numerical
/// failure the trajectory is truncated and ok = false.
RolloutResult rollout(const SkeletonModel& model, const GeneralizedState& x0, const ControlTrajectory& controls,
                      double horizon, double dt, const IntegratorOptions& options = {});

/// A direction in (initial state, control knots) space. Empty members mean
/// zero.
struct SensitivitySeed {
  VectorXd dx0;                ///< 2*dof entries
  std::vector<VectorXd> dtau;  ///< per control knot, dof entries
};

struct SensitivityResult {
  RolloutResult nominal;
  /// d x_k / d seed for every seed and recorded knot (2*dof entries).
  std::vector<std::vector<VectorXd>> directional;
};

/// Rollout with forward-mode dual sensitivities. Fixed-step methods only
/// (rk4, semi_implicit_euler); throws ValidationError for rk45.
SensitivityResult rollout_with_sensitivities(const SkeletonModel& model, const GeneralizedState& x0,
                                             const ControlTrajectory& controls, double horizon, double dt,
                                             const std::vector<SensitivitySeed>& seeds,
                                             const IntegratorOptions& options = {});

}  // namespace msk
