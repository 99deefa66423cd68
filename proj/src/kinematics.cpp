#include "msk/kinematics.hpp"

#include "msk/detail/frames.hpp"

namespace msk {

namespace {

void check_q(const SkeletonModel& model, const GeneralizedState& state) {
  if (state.q.size() != model.dof())
    throw DimensionError("q has " + std::to_string(state.q.size()) + " entries, model expects " +
                         std::to_string(model.dof()));
}

MatrixXd expand(const SkeletonModel& model, int segment, const MatrixXd& compact) {
  MatrixXd J = MatrixXd::Zero(compact.rows(), model.dof());
  const auto& path = model.path_dofs(segment);
  for (std::size_t c = 0; c < path.size(); ++c) J.col(path[c]) = compact.col(static_cast<Eigen::Index>(c));
  return J;
}

}  // namespace

PoseResult forward_kinematics(const SkeletonModel& model, const GeneralizedState& state) {
  check_q(model, state);
  auto f = detail::compute_frames<double>(model, state.q);
  PoseResult out;
  out.rotations = std::move(f.R);
  out.origins = std::move(f.p);
  out.markers.reserve(model.marker_count());
  for (int m = 0; m < model.marker_count(); ++m) {
    const int s = model.marker_segment(m);
    out.markers.push_back(out.origins[s] +
                          out.rotations[s] * model.markers()[m].local_position.cwiseProduct(model.segments()[s].scale));
  }
  return out;
}

std::vector<Vector3d> marker_positions(const SkeletonModel& model, const GeneralizedState& state) {
  return forward_kinematics(model, state).markers;
}

VectorXd joint_centres(const SkeletonModel& model, const GeneralizedState& state) {
  check_q(model, state);
  const auto f = detail::compute_frames<double>(model, state.q);
  VectorXd out(3 * model.segment_count());
  for (int i = 0; i < model.segment_count(); ++i) out.segment<3>(3 * i) = f.p[i];
  return out;
}

MatrixXd point_jacobian(const SkeletonModel& model, const GeneralizedState& state, int segment,
                        const Vector3d& local_point) {
  check_q(model, state);
  if (segment < 0 || segment >= model.segment_count())
    throw ValidationError("point_jacobian: unknown segment index " + std::to_string(segment));
  const auto f = detail::compute_frames<double>(model, state.q);
  const Vector3d x = detail::world_point<double>(model, f, segment, local_point);
  return expand(model, segment, detail::point_jacobian_compact<double>(model, f, segment, x));
}

MatrixXd point_jacobian(const SkeletonModel& model, const GeneralizedState& state, const std::string& segment,
                        const Vector3d& local_point) {
  return point_jacobian(model, state, model.segment_index(segment), local_point);
}

MatrixXd contact_jacobian(const SkeletonModel& model, const GeneralizedState& state) {
  check_q(model, state);
  const auto f = detail::compute_frames<double>(model, state.q);
  MatrixXd J = MatrixXd::Zero(3 * model.sphere_count(), model.dof());
  for (int k = 0; k < model.sphere_count(); ++k) {
    const int s = model.sphere_segment(k);
    const Vector3d x = detail::world_point<double>(model, f, s, model.contact_spheres()[k].local_position);
    J.middleRows<3>(3 * k) = expand(model, s, detail::point_jacobian_compact<double>(model, f, s, x));
  }
  return J;
}

MatrixXd marker_jacobian(const SkeletonModel& model, const GeneralizedState& state) {
  check_q(model, state);
  const auto f = detail::compute_frames<double>(model, state.q);
  MatrixXd J = MatrixXd::Zero(3 * model.marker_count(), model.dof());
  for (int m = 0; m < model.marker_count(); ++m) {
    const int s = model.marker_segment(m);
    const Vector3d x = detail::world_point<double>(model, f, s, model.markers()[m].local_position);
    const MatrixXd Jc = detail::point_jacobian_compact<double>(model, f, s, x);
    const auto& path = model.path_dofs(s);
    for (std::size_t c = 0; c < path.size(); ++c) J.block<3, 1>(3 * m, path[c]) = Jc.col(static_cast<Eigen::Index>(c));
  }
  return J;
}

}  // namespace msk
