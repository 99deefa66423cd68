#include "msk/dynamics.hpp"

#include "msk/detail/dynamics_impl.hpp"

namespace msk {

namespace {

detail::Frames<double> frames(const SkeletonModel& model, const GeneralizedState& state) {
  check_dimensions(model, state);
  return detail::compute_frames<double>(model, state.q);
}

void check_vector(const SkeletonModel& model, const VectorXd& v, const char* what) {
  if (v.size() != model.dof())
    throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) + " entries, model expects " +
                         std::to_string(model.dof()));
}

VectorXd contact_term(const SkeletonModel& model, const detail::Frames<double>& f, const GeneralizedState& state,
                      const ContactInput& contact) {
  switch (contact.mode()) {
    case ContactInput::Mode::none:
      return VectorXd::Zero(model.dof());
    case ContactInput::Mode::automatic:
      return detail::contact<double>(model, f, state.qdot).generalized;
    case ContactInput::Mode::prescribed:
      if (contact.forces().size() != 3 * model.sphere_count())
        throw DimensionError("prescribed contact forces need " + std::to_string(3 * model.sphere_count()) +
                             " entries");
      return detail::prescribed_contact<double>(model, f, contact.forces());
  }
  return VectorXd::Zero(model.dof());
}

}  // namespace

MatrixXd mass_matrix(const SkeletonModel& model, const GeneralizedState& state) {
  return detail::mass_matrix<double>(model, frames(model, state));
}

MatrixXd mass_matrix_rnea(const SkeletonModel& model, const GeneralizedState& state) {
  const auto f = frames(model, state);
  const int n = model.dof();
  MatrixXd M(n, n);
  const VectorXd zero = VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    M.col(c) = detail::rnea<double>(model, f, zero, VectorXd::Unit(n, c), false);
  }
  return M;
}

VectorXd gravity_forces(const SkeletonModel& model, const GeneralizedState& state) {
  const VectorXd zero = VectorXd::Zero(model.dof());
  return detail::rnea<double>(model, frames(model, state), zero, zero, true);
}

VectorXd bias_forces(const SkeletonModel& model, const GeneralizedState& state) {
  return detail::rnea<double>(model, frames(model, state), state.qdot, VectorXd::Zero(model.dof()), true);
}

DynamicsTerms dynamics_terms(const SkeletonModel& model, const GeneralizedState& state) {
  const auto f = frames(model, state);
  const VectorXd zero = VectorXd::Zero(model.dof());
  return {detail::mass_matrix<double>(model, f), detail::rnea<double>(model, f, state.qdot, zero, true),
          detail::rnea<double>(model, f, zero, zero, true)};
}

KineticState contact_forces(const SkeletonModel& model, const GeneralizedState& state) {
  const auto f = frames(model, state);
  const auto c = detail::contact<double>(model, f, state.qdot);
  KineticState out;
  Vector3d moment_y_weighted = Vector3d::Zero();
  double total_normal = 0.0;
  for (int k = 0; k < model.sphere_count(); ++k) {
    out.lambda_spheres.push_back({c.normal[k], c.tangential[k]});
    out.lambda_total += c.normal[k] + c.tangential[k];
    const double fn = c.normal[k].y();
    if (fn > 0.0) {
      moment_y_weighted += fn * Vector3d(c.centres[k].x(), 0.0, c.centres[k].z());
      total_normal += fn;
    }
  }
  if (total_normal > 0.0) out.cop = moment_y_weighted / total_normal;
  return out;
}

VectorXd contact_generalized_forces(const SkeletonModel& model, const GeneralizedState& state,
                                    const ContactInput& contact) {
  return contact_term(model, frames(model, state), state, contact);
}

namespace {

void check_activations(const SkeletonModel& model, const VectorXd& a) {
  if (a.size() != model.muscle_count())
    throw DimensionError("expected " + std::to_string(model.muscle_count()) + " activations, got " +
                         std::to_string(a.size()));
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (!(a(j) >= 0.0 && a(j) <= 1.0))
      throw ValidationError("activation out of range [0, 1] for muscle '" + model.muscles()[j].name + "'");
  }
}

}  // namespace

VectorXd muscle_forces(const SkeletonModel& model, const VectorXd& activations, const GeneralizedState& state) {
  check_dimensions(model, state);
  check_activations(model, activations);
  VectorXd F(model.muscle_count());
  for (int j = 0; j < model.muscle_count(); ++j)
    F(j) = detail::muscle_force<double>(model, j, activations(j), state.q, state.qdot);
  return F;
}

VectorXd muscle_torques(const SkeletonModel& model, const VectorXd& activations, const GeneralizedState& state,
                        const VectorXd& residual) {
  check_dimensions(model, state);
  check_activations(model, activations);
  VectorXd tau = detail::muscle_generalized<double>(model, activations, state.q, state.qdot);
  if (residual.size() != 0) {
    check_vector(model, residual, "residual torque");
    tau += residual;
  }
  return tau;
}

VectorXd inverse_dynamics(const SkeletonModel& model, const GeneralizedState& state, const VectorXd& qddot,
                          const ContactInput& contact) {
  const auto f = frames(model, state);
  check_vector(model, qddot, "qddot");
  return detail::rnea<double>(model, f, state.qdot, qddot, true) - contact_term(model, f, state, contact);
}

VectorXd forward_dynamics(const SkeletonModel& model, const GeneralizedState& state, const VectorXd& tau,
                          const ContactInput& contact) {
  const auto f = frames(model, state);
  check_vector(model, tau, "tau");
  const VectorXd zero = VectorXd::Zero(model.dof());
  const MatrixXd M = detail::mass_matrix<double>(model, f);
  const VectorXd rhs = tau + contact_term(model, f, state, contact) - detail::rnea<double>(model, f, state.qdot, zero);
  return detail::solve_accelerations<double>(model, M, rhs);
}

VectorXd from_rotational(const SkeletonModel& model, const VectorXd& tau_rot) {
  if (tau_rot.size() != model.rot_dof())
    throw DimensionError("expected " + std::to_string(model.rot_dof()) + " joint torques, got " +
                         std::to_string(tau_rot.size()));
  VectorXd tau = VectorXd::Zero(model.dof());
  tau.tail(model.rot_dof()) = tau_rot;
  return tau;
}

double kinetic_energy(const SkeletonModel& model, const GeneralizedState& state) {
  return 0.5 * state.qdot.dot(mass_matrix(model, state) * state.qdot);
}

double potential_energy(const SkeletonModel& model, const GeneralizedState& state) {
  const auto f = frames(model, state);
  double V = 0.0;
  for (int i = 0; i < model.segment_count(); ++i) {
    const auto& seg = model.segments()[i];
    V -= seg.mass * model.gravity().dot(detail::world_point<double>(model, f, i, seg.com));
  }
  return V;
}

Vector3d centre_of_mass(const SkeletonModel& model, const GeneralizedState& state) {
  const auto f = frames(model, state);
  Vector3d c = Vector3d::Zero();
  double m = 0.0;
  for (int i = 0; i < model.segment_count(); ++i) {
    const auto& seg = model.segments()[i];
    c += seg.mass * detail::world_point<double>(model, f, i, seg.com);
    m += seg.mass;
  }
  return m > 0.0 ? Vector3d(c / m) : c;
}

}  // namespace msk
