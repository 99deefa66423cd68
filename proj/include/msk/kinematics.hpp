#pragma once

#include <vector>

#include "msk/model.hpp"

namespace msk {

/// Global segment poses and marker positions for one configuration.
struct PoseResult {
  std::vector<Matrix3d> rotations;  ///< per segment
  std::vector<Vector3d> origins;    ///< per segment (joint centres)
  std::vector<Vector3d> markers;    ///< per marker
};

/// Anatomical forward kinematics. Only state.q is read; throws
/// DimensionError on a layout mismatch.
PoseResult forward_kinematics(const SkeletonModel& model, const GeneralizedState& state);

std::vector<Vector3d> marker_positions(const SkeletonModel& model, const GeneralizedState& state);

/// Joint centres stacked into one 3*N_s vector (the J^fk of the FK layer).
VectorXd joint_centres(const SkeletonModel& model, const GeneralizedState& state);

/// 3 x dof Jacobian of a point fixed to `segment` at `local_point` (segment
/// frame, scaled by the segment's scale): v = J qdot.
MatrixXd point_jacobian(const SkeletonModel& model, const GeneralizedState& state, int segment,
                        const Vector3d& local_point);
MatrixXd point_jacobian(const SkeletonModel& model, const GeneralizedState& state, const std::string& segment,
                        const Vector3d& local_point);

/// Stacked point Jacobians of all contact sphere centres (3K x dof).
MatrixXd contact_jacobian(const SkeletonModel& model, const GeneralizedState& state);

/// Stacked marker Jacobians (3M x dof).
MatrixXd marker_jacobian(const SkeletonModel& model, const GeneralizedState& state);

}  // namespace msk
