#pragma once

// Equations of motion in generalized coordinates:
//   J_C^T lambda + tau = M(q) qdd + C(q, qd) + g(q).
// Generalized force vectors span all coordinates; the first six entries act
// on the root (residual root forces), the rest are joint torques.

#include <vector>

#include "msk/model.hpp"

namespace msk {

struct DynamicsTerms {
  MatrixXd M;
  VectorXd bias;     ///< C(q, qd) + g(q)
  VectorXd gravity;  ///< g(q)
};

/// How the contact term J_C^T lambda is formed.
class ContactInput {
 public:
  enum class Mode { none, automatic, prescribed };

  static ContactInput none() { return ContactInput(Mode::none, {}); }
  /// Forces from the Hunt-Crossley contact model at the current state.
  static ContactInput automatic() { return ContactInput(Mode::automatic, {}); }
  /// Per-sphere force vectors stacked (3K entries).
  static ContactInput prescribed(VectorXd sphere_forces) {
    return ContactInput(Mode::prescribed, std::move(sphere_forces));
  }

  Mode mode() const { return mode_; }
  const VectorXd& forces() const { return forces_; }

 private:
  ContactInput(Mode mode, VectorXd forces) : mode_(mode), forces_(std::move(forces)) {}
  Mode mode_;
  VectorXd forces_;
};

/// Mass matrix by summing segment Jacobian contributions.
MatrixXd mass_matrix(const SkeletonModel& model, const GeneralizedState& state);
/// Mass matrix assembled column by column from unit-acceleration RNEA calls
/// with gravity and velocities removed. Independent of mass_matrix().
MatrixXd mass_matrix_rnea(const SkeletonModel& model, const GeneralizedState& state);

VectorXd gravity_forces(const SkeletonModel& model, const GeneralizedState& state);
/// C(q, qd) + g(q).
VectorXd bias_forces(const SkeletonModel& model, const GeneralizedState& state);
DynamicsTerms dynamics_terms(const SkeletonModel& model, const GeneralizedState& state);

/// Hunt-Crossley ground contact forces (lambda fields of KineticState; tau
/// is left empty). The centre of pressure is filled when any sphere is
/// loaded.
KineticState contact_forces(const SkeletonModel& model, const GeneralizedState& state);

/// J_C^T lambda for the given contact input.
VectorXd contact_generalized_forces(const SkeletonModel& model, const GeneralizedState& state,
                                    const ContactInput& contact);

/// Per-muscle tendon forces F_j(a_j, l_j, v_j).
VectorXd muscle_forces(const SkeletonModel& model, const VectorXd& activations, const GeneralizedState& state);

/// Generalized torques sum_j r_ij F_j + tau_tm. `residual` (optional, dof
/// entries) is added as the ideal torque motor contribution. Throws
/// ValidationError for activations outside [0, 1].
VectorXd muscle_torques(const SkeletonModel& model, const VectorXd& activations, const GeneralizedState& state,
                        const VectorXd& residual = {});

/// tau = M qdd + C + g - J_C^T lambda over all coordinates.
VectorXd inverse_dynamics(const SkeletonModel& model, const GeneralizedState& state, const VectorXd& qddot,
                          const ContactInput& contact);

/// Solves M qdd = J_C^T lambda + tau - C - g. With a locked root the root
/// accelerations are zero and tau's root entries are ignored. Throws
/// NumericalError if M is not positive definite.
VectorXd forward_dynamics(const SkeletonModel& model, const GeneralizedState& state, const VectorXd& tau,
                          const ContactInput& contact);

/// Joint torque part (rotational DoFs) and root residual part of a
/// generalized force vector.
inline VectorXd rotational_part(const VectorXd& tau) { return tau.tail(tau.size() - 6); }
inline VectorXd root_part(const VectorXd& tau) { return tau.head(6); }
/// Embeds rotational torques into a generalized vector with zero root part.
VectorXd from_rotational(const SkeletonModel& model, const VectorXd& tau_rot);

double kinetic_energy(const SkeletonModel& model, const GeneralizedState& state);
/// -sum m_i g . c_i (zero at the world origin).
double potential_energy(const SkeletonModel& model, const GeneralizedState& state);
/// Whole-body centre of mass.
Vector3d centre_of_mass(const SkeletonModel& model, const GeneralizedState& state);

}  // namespace msk
