#pragma once

// Templated forward-kinematics core shared by kinematics, dynamics and the
// AD-instantiated integrator.

#include <vector>

#include "msk/model.hpp"
#include "msk/rotation.hpp"

namespace msk::detail {

template <class S>
struct Frames {
  std::vector<Mat3<S>> R;  ///< segment world rotation
  std::vector<Vec3<S>> p;  ///< segment origin (inboard joint centre), world
  /// World rotation axis of every joint coordinate (index = q index; the
  /// first six entries are unused).
  std::vector<Vec3<S>> axis;
  Mat3<S> root_jacobian;  ///< left Jacobian of the root rotation
  Vec3<S> phi;            ///< root exponential coordinates
};

template <class S>
Vec3<S> scaled(const Vector3d& local, const Vector3d& scale) {
  return local.cwiseProduct(scale).template cast<S>();
}

/// Segment poses: R_i = R_par exp(q_o) prod_k Rot(a_k, q_k) and
/// p_i = p_par + R_par (J0_i (.) s_par).
template <class S>
Frames<S> compute_frames(const SkeletonModel& model, const VecX<S>& q) {
  const int ns = model.segment_count();
  Frames<S> f;
  f.R.resize(ns);
  f.p.resize(ns);
  f.axis.assign(model.dof(), Vec3<S>::Zero());
  const Vec3<S> phi = q.template segment<3>(3);
  f.R[0] = rot::exp_map<S>(phi);
  f.p[0] = q.template segment<3>(0) + model.segments()[0].local_offset.template cast<S>();
  f.root_jacobian = rot::left_jacobian<S>(phi);
  f.phi = phi;
  for (int i = 1; i < ns; ++i) {
    const int par = model.parent(i);
    const int j = model.inboard_joint(i);
    const auto& js = model.joints()[j];
    f.p[i] = f.p[par] + f.R[par] * scaled<S>(model.segments()[i].local_offset, model.segments()[par].scale);
    Mat3<S> B = f.R[par] * rot::exp_map<S>(js.fixed_orientation.template cast<S>());
    const int off = model.dof_offset(j);
    for (int k = 0; k < js.dof_count; ++k) {
      const Vec3<S> a_local = js.axes[k].template cast<S>();
      f.axis[off + k] = B * a_local;
      B = B * rot::axis_angle<S>(a_local, q(off + k));
    }
    f.R[i] = B;
  }
  return f;
}

/// World position of a point given in segment-local coordinates (scaled by
/// the segment's own scale).
template <class S>
Vec3<S> world_point(const SkeletonModel& model, const Frames<S>& f, int segment, const Vector3d& local) {
  return f.p[segment] + f.R[segment] * scaled<S>(local, model.segments()[segment].scale);
}

/// Linear velocity Jacobian of world point x rigidly attached to `segment`,
/// restricted to path_dofs(segment) (3 x path size).
template <class S>
MatX<S> point_jacobian_compact(const SkeletonModel& model, const Frames<S>& f, int segment, const Vec3<S>& x) {
  const auto& path = model.path_dofs(segment);
  MatX<S> J = MatX<S>::Zero(3, static_cast<Eigen::Index>(path.size()));
  J.template block<3, 3>(0, 0).setIdentity();
  J.template block<3, 3>(0, 3) = -rot::skew<S>(Vec3<S>(x - f.p[0])) * f.root_jacobian;
  for (std::size_t c = 6; c < path.size(); ++c) {
    const int idx = path[c];
    const int seg = model.dof_segment(idx);
    J.col(static_cast<Eigen::Index>(c)) = f.axis[idx].cross(Vec3<S>(x - f.p[seg]));
  }
  return J;
}

/// Angular velocity Jacobian of `segment`, compact over path_dofs(segment).
template <class S>
MatX<S> angular_jacobian_compact(const SkeletonModel& model, const Frames<S>& f, int segment) {
  const auto& path = model.path_dofs(segment);
  MatX<S> J = MatX<S>::Zero(3, static_cast<Eigen::Index>(path.size()));
  J.template block<3, 3>(0, 3) = f.root_jacobian;
  for (std::size_t c = 6; c < path.size(); ++c) J.col(static_cast<Eigen::Index>(c)) = f.axis[path[c]];
  return J;
}

/// Velocity of a world point attached to `segment`.
template <class S>
Vec3<S> point_velocity(const SkeletonModel& model, const Frames<S>& f, int segment, const Vec3<S>& x,
                       const VecX<S>& qdot) {
  const auto& path = model.path_dofs(segment);
  const MatX<S> J = point_jacobian_compact<S>(model, f, segment, x);
  Vec3<S> v = Vec3<S>::Zero();
  for (std::size_t c = 0; c < path.size(); ++c) v += J.col(static_cast<Eigen::Index>(c)) * qdot(path[c]);
  return v;
}

}  // namespace msk::detail
