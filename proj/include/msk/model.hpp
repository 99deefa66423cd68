#pragma once

// Musculoskeletal body model: a rooted tree of rigid segments connected by
// joints with at most three rotational DoFs, plus contact spheres, Hill-type
// muscles with constant moment arms, residual torque actuators and markers.
//
// Generalized coordinates are laid out as
//   q = [T (3), R (3, exponential coordinates), q_r (sum of joint DoFs)]
// with joints ordered by the preorder position of their child segment.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msk/types.hpp"

namespace msk {

struct SegmentSpec {
  std::string name;
  double mass = 0.0;
  Vector3d com = Vector3d::Zero();
  Matrix3d inertia = Matrix3d::Zero();  ///< about the COM, segment frame
  /// Inboard joint centre in the parent frame at rest (unscaled).
  Vector3d local_offset = Vector3d::Zero();
  Vector3d scale = Vector3d::Ones();
};

struct JointSpec {
  std::string name;
  std::string parent;
  std::string child;
  int dof_count = 0;
  std::vector<Vector3d> axes;
  Vector3d fixed_orientation = Vector3d::Zero();  ///< exponential coordinates
  std::vector<std::pair<double, double>> limits;
};

struct ContactSphereSpec {
  std::string segment;
  Vector3d local_position = Vector3d::Zero();
  double radius = 0.0;
  double k_n = 1e5;
  double c_n = 2.0;
  double mu = 0.8;
  double eps = 1e-3;
};

/// Constant moment arm of a muscle about one joint DoF.
struct MomentArm {
  std::string joint;
  int dof = 0;
  double r = 0.0;
  double reference_angle = 0.0;  ///< coordinate value at which l = l_opt
};

/// Normalized Hill curve parameters.
struct MuscleCurves {
  double fl_width = 0.45;
  double fv_max_eccentric = 1.4;
  double fv_concentric_curvature = 0.25;
  double max_contraction_velocity = 10.0;  ///< optimal fiber lengths per second
  double passive_strain = 0.6;             ///< strain at which F_pass = F_max
  double passive_shape = 4.0;
};

struct MuscleSpec {
  std::string name;
  double f_max = 0.0;
  double optimal_fiber_length = 0.0;
  std::vector<MomentArm> moment_arms;
  MuscleCurves curves;
};

struct ActuatorSpec {
  std::string joint;
  std::vector<double> bounds;  ///< per-DoF symmetric torque bound, N m
};

struct MarkerSpec {
  std::string name;
  std::string segment;
  Vector3d local_position = Vector3d::Zero();
};

/// Raw model content as read from a file, before validation.
struct ModelDescription {
  std::string name;
  std::vector<SegmentSpec> segments;
  std::vector<JointSpec> joints;
  std::vector<ContactSphereSpec> contact_spheres;
  std::vector<MuscleSpec> muscles;
  std::vector<ActuatorSpec> actuators;
  std::vector<MarkerSpec> markers;
  Vector3d gravity{0.0, -9.81, 0.0};
  /// When true the six root coordinates are held fixed (fixed-base models).
  bool root_locked = false;
};

/// Validated, immutable skeleton with resolved topology.
class SkeletonModel {
 public:
  /// Validates `description` and orders segments root-first (preorder).
  /// Throws ValidationError naming the violated invariant.
  explicit SkeletonModel(ModelDescription description);

  const ModelDescription& description() const { return desc_; }
  const std::string& name() const { return desc_.name; }

  int segment_count() const { return static_cast<int>(desc_.segments.size()); }
  int joint_count() const { return static_cast<int>(desc_.joints.size()); }
  int sphere_count() const { return static_cast<int>(desc_.contact_spheres.size()); }
  int muscle_count() const { return static_cast<int>(desc_.muscles.size()); }
  int marker_count() const { return static_cast<int>(desc_.markers.size()); }

  /// Total generalized coordinates, 6 + rotational DoFs.
  int dof() const { return 6 + rot_dof_; }
  int rot_dof() const { return rot_dof_; }
  bool root_locked() const { return desc_.root_locked; }
  const Vector3d& gravity() const { return desc_.gravity; }

  const std::vector<SegmentSpec>& segments() const { return desc_.segments; }
  const std::vector<JointSpec>& joints() const { return desc_.joints; }
  const std::vector<ContactSphereSpec>& contact_spheres() const { return desc_.contact_spheres; }
  const std::vector<MuscleSpec>& muscles() const { return desc_.muscles; }
  const std::vector<ActuatorSpec>& actuators() const { return desc_.actuators; }
  const std::vector<MarkerSpec>& markers() const { return desc_.markers; }

  /// Parent segment index, -1 for the root.
  int parent(int segment) const { return parent_[segment]; }
  /// Joint whose child is `segment`, -1 for the root.
  int inboard_joint(int segment) const { return inboard_joint_[segment]; }
  /// One past the last segment in the preorder subtree of `segment`.
  int subtree_end(int segment) const { return subtree_end_[segment]; }
  /// Index in q of the joint's first DoF.
  int dof_offset(int joint) const { return dof_offset_[joint]; }
  int joint_segment(int joint) const { return joint_child_[joint]; }
  /// Coordinates that move `segment`: the six root ones and all joint DoFs
  /// on the root-to-segment path, ascending.
  const std::vector<int>& path_dofs(int segment) const { return path_dofs_[segment]; }
  /// Segment moved by coordinate `index` (the root for indices < 6).
  int dof_segment(int index) const { return dof_segment_[index]; }

  int sphere_segment(int k) const { return sphere_segment_[k]; }
  int marker_segment(int m) const { return marker_segment_[m]; }

  /// Resolved (coordinate index, arm, reference angle) triples per muscle.
  struct ResolvedArm {
    int index;
    double r;
    double reference_angle;
  };
  const std::vector<ResolvedArm>& muscle_arms(int muscle) const { return muscle_arms_[muscle]; }

  /// Actuated coordinates and their symmetric bounds, in actuator order.
  const std::vector<std::pair<int, double>>& actuated_dofs() const { return actuated_; }

  std::optional<int> find_segment(const std::string& name) const;
  std::optional<int> find_joint(const std::string& name) const;
  std::optional<int> find_marker(const std::string& name) const;
  int segment_index(const std::string& name) const;  ///< throws ValidationError

  /// Names of the generalized coordinates (T_x .. R_z, then <joint>_<k>).
  const std::vector<std::string>& coordinate_names() const { return coord_names_; }
  /// Lower/upper joint limits per coordinate (root: +-inf).
  const VectorXd& lower_limits() const { return lower_; }
  const VectorXd& upper_limits() const { return upper_; }

  double total_mass() const;

 private:
  ModelDescription desc_;
  int rot_dof_ = 0;
  std::vector<int> parent_, inboard_joint_, subtree_end_, dof_offset_, joint_child_;
  std::vector<std::vector<int>> path_dofs_;
  std::vector<int> dof_segment_;
  std::vector<int> sphere_segment_, marker_segment_;
  std::vector<std::vector<ResolvedArm>> muscle_arms_;
  std::vector<std::pair<int, double>> actuated_;
  std::map<std::string, int> segment_lookup_, joint_lookup_, marker_lookup_;
  std::vector<std::string> coord_names_;
  VectorXd lower_, upper_;
};

/// Generalized positions q and their time derivatives qdot.
struct GeneralizedState {
  VectorXd q;
  VectorXd qdot;

  static GeneralizedState zero(const SkeletonModel& model);

  auto T() { return q.segment<3>(0); }
  auto T() const { return q.segment<3>(0); }
  auto R() { return q.segment<3>(3); }
  auto R() const { return q.segment<3>(3); }
  auto q_r() { return q.tail(q.size() - 6); }
  auto q_r() const { return q.tail(q.size() - 6); }
};

/// Throws DimensionError unless q and qdot both have model.dof() entries.
void check_dimensions(const SkeletonModel& model, const GeneralizedState& state);

/// Maps the root rotation to |R| <= pi, rewriting R_dot so that the world
/// angular velocity is preserved.
GeneralizedState canonicalize(const GeneralizedState& state);

/// Contact force produced by one sphere.
struct SphereForce {
  Vector3d normal = Vector3d::Zero();
  Vector3d tangential = Vector3d::Zero();
};

struct KineticState {
  VectorXd tau;  ///< rotational DoFs
  Vector3d lambda_total = Vector3d::Zero();
  std::vector<SphereForce> lambda_spheres;
  std::optional<Vector3d> cop;
};

// --- file format -----------------------------------------------------------

/// Parses model text into an unvalidated description; throws ParseError.
ModelDescription parse_description(const std::string& text);
/// Serializes a model to the model file format (round-trips exactly).
std::string serialize_model(const SkeletonModel& model);

/// Parses model text; throws ParseError or ValidationError.
SkeletonModel parse_model(const std::string& text);
/// Loads a model file; throws ParseError (including unreadable files) or
/// ValidationError.
SkeletonModel load_model(const std::string& path);
void save_model(const SkeletonModel& model, const std::string& path);

struct ScaleOptions {
  /// Multiply mass by s_x s_y s_z and rescale inertia accordingly.
  bool volumetric_mass = false;
};

/// Returns a copy whose segment scales are multiplied element-wise by
/// `scales` (segment name -> factors).
SkeletonModel scale_model(const SkeletonModel& model, const std::map<std::string, Vector3d>& scales,
                          const ScaleOptions& options = {});

}  // namespace msk
