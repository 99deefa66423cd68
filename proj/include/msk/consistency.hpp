#pragma once

// Training losses for kinetics estimation, the inverse-forward roundtrip
// check, and a small trainable inverse-dynamics surrogate.

#include <optional>
#include <string>
#include <vector>

#include "msk/integrator.hpp"
#include "msk/model.hpp"

namespace msk {

struct LossWeights {
  double lambda = 1.0;
  double tau = 1.0;
  double q = 1.0;
  double J = 1.0;

  /// Throws ValidationError for negative or non-finite weights.
  void validate() const;
};

struct KineticLoss {
  double lambda = 0.0;  ///< w_lambda sum |lambda^ - lambda~|^2
  double tau = 0.0;     ///< w_tau sum |tau^ - tau~|^2
  double total() const { return lambda + tau; }
};

/// Summed over frames. Throws DimensionError on length or size mismatch.
KineticLoss kinetic_loss(const std::vector<KineticState>& pred, const std::vector<KineticState>& ref,
                         const LossWeights& weights);

struct ConsistencyLoss {
  double q = 0.0;  ///< w_q sum |q^fd - q~|^2
  double J = 0.0;  ///< w_J sum |J^fk - J~|^2
  double total() const { return q + J; }
};

/// Joint positions supplied by the caller.
ConsistencyLoss consistency_loss(const std::vector<VectorXd>& fd_q, const std::vector<VectorXd>& fk_joints,
                                 const std::vector<VectorXd>& ref_q, const std::vector<VectorXd>& ref_joints,
                                 const LossWeights& weights);
/// Joint positions from forward kinematics of both coordinate series.
ConsistencyLoss consistency_loss(const SkeletonModel& model, const std::vector<VectorXd>& fd_q,
                                 const std::vector<VectorXd>& ref_q, const LossWeights& weights);

// --- roundtrip -------------------------------------------------------------

struct RoundtripOptions {
  ContactInput::Mode contact = ContactInput::Mode::automatic;
  IntegratorOptions integrator;
  LossWeights weights;
};

struct RoundtripReport {
  std::vector<double> times;
  /// Per frame |q_fd - q| and |J_fk - J|.
  std::vector<double> q_residual, joint_residual;
  /// Per frame kinetic disagreement between the inverse-dynamics kinetics of
  /// the original and the reconstructed trajectories.
  std::vector<double> tau_residual, lambda_residual;
  /// Norm of the six root entries of the inverse-dynamics force per frame.
  std::vector<double> root_residual;
  /// Kinetics computed from the input trajectory.
  std::vector<KineticState> kinetics;
  std::vector<VectorXd> tau_full;
  Trajectory reconstructed;
  ConsistencyLoss consistency;
  KineticLoss kinetic;
  bool ok = true;
  std::optional<double> divergence_time;
  std::string error;

  double max_q_residual() const;
};

/// Inverse dynamics per frame, then a zero-order-hold rollout from the first
/// state under those kinetics, compared against the input. Divergence is
/// reported (not thrown) and the residuals of the completed frames kept.
/// Throws ValidationError for fewer than 2 frames or a non-uniform grid,
/// DimensionError for missing accelerations.
RoundtripReport roundtrip_check(const SkeletonModel& model, const Trajectory& trajectory,
                                const RoundtripOptions& options = {});

// --- surrogate inverse dynamics ---------------------------------------------

/// Polynomial regressor from [q, qdot] (root coordinates dropped when the
/// root is locked) to [tau over rotational DoFs, total contact force].
class SurrogateId {
 public:
  SurrogateId() = default;
  SurrogateId(const SkeletonModel& model, int degree);

  int degree() const { return degree_; }
  int input_size() const { return static_cast<int>(inputs_.size()); }
  int feature_size() const;
  int output_size() const { return rot_dof_ + 3; }
  int rot_dof() const { return rot_dof_; }

  /// Coordinate indices (into [q; qdot]) that feed the features.
  const std::vector<int>& inputs() const { return inputs_; }
  /// Inputs are standardized as (x - offset) / scale before the features.
  VectorXd offset, scale;
  /// output_size x feature_size.
  MatrixXd weights;
  double ridge = 0.0;

  VectorXd features(const GeneralizedState& state) const;
  /// d features / d [q; qdot] (feature_size x 2 dof).
  MatrixXd feature_jacobian(const GeneralizedState& state) const;
  /// [tau_rot; lambda].
  VectorXd predict_raw(const GeneralizedState& state) const;
  /// tau over rotational DoFs and the total contact force.
  KineticState predict(const GeneralizedState& state) const;

  std::string serialize() const;
  static SurrogateId parse(const std::string& text);

 private:
  int degree_ = 1;
  int rot_dof_ = 0;
  int dof_ = 0;
  std::vector<int> inputs_;
};

/// One training trajectory with its reference kinetics.
struct TrainingSequence {
  Trajectory trajectory;
  std::vector<KineticState> reference;
};

enum class Optimizer { adam, gradient_descent };

struct SurrogateTrainingOptions {
  int degree = 2;
  double ridge = 1e-6;
  LossWeights weights;
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-2;
  int steps = 200;
  /// Rollout steps per training window (1 = single-frame supervision).
  int horizon = 1;
  /// Start from the ridge least-squares fit to the reference kinetics.
  bool warm_start = true;
  /// Used instead of the warm start when set (must match the shape).
  std::optional<MatrixXd> initial_weights;
  ContactInput::Mode contact = ContactInput::Mode::automatic;
  IntegratorOptions integrator;
};

struct TrainingReport {
  std::vector<int> step;
  std::vector<double> kinetic_lambda, kinetic_tau, consistency_q, consistency_J, ridge, total;
};

struct SurrogateFit {
  SurrogateId surrogate;
  TrainingReport report;
};

struct SurrogateObjective {
  KineticLoss kinetic;
  ConsistencyLoss consistency;
  double ridge = 0.0;
  double total() const { return kinetic.total() + consistency.total() + ridge; }
};

/// Training objective of `surrogate` on the dataset: kinetic loss on every
/// frame, consistency loss on rollouts of `horizon` steps started from the
/// reference state at each window start (forces held per step, contact from
/// the contact model), plus the ridge penalty. Fills the gradient with
/// respect to surrogate.weights when `gradient` is non-null.
SurrogateObjective surrogate_objective(const SkeletonModel& model, const SurrogateId& surrogate,
                                       const std::vector<TrainingSequence>& data,
                                       const SurrogateTrainingOptions& options, MatrixXd* gradient = nullptr);

/// Throws ValidationError for an empty or misaligned dataset and
/// NumericalError (naming the step) when the loss becomes non-finite.
SurrogateFit fit_surrogate_id(const SkeletonModel& model, const std::vector<TrainingSequence>& data,
                              const SurrogateTrainingOptions& options = {});

/// Closed-loop rollout driven by the surrogate torques (recomputed every dt,
/// held in between) with model-implied contact.
RolloutResult surrogate_rollout(const SkeletonModel& model, const SurrogateId& surrogate,
                                const GeneralizedState& x0, double horizon, double dt,
                                ContactInput::Mode contact = ContactInput::Mode::automatic,
                                const IntegratorOptions& options = {});

}  // namespace msk
