#include "msk/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "msk/rotation.hpp"

namespace msk {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw ValidationError(what); }

bool finite(const Vector3d& v) { return v.allFinite(); }

void validate_segment(const SegmentSpec& s) {
  if (s.name.empty()) invalid("segment with empty name");
  if (!std::isfinite(s.mass) || s.mass < 0.0) invalid("segment '" + s.name + "': negative mass");
  if (!finite(s.com) || !finite(s.local_offset) || !s.inertia.allFinite())
    invalid("segment '" + s.name + "': non-finite geometry");
  const double scale = std::max(1.0, s.inertia.cwiseAbs().maxCoeff());
  if ((s.inertia - s.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    invalid("segment '" + s.name + "': inertia not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(s.inertia);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
    invalid("segment '" + s.name + "': inertia not positive semidefinite");
  if (!finite(s.scale) || (s.scale.array() <= 0.0).any())
    invalid("segment '" + s.name + "': nonpositive scale");
}

void validate_joint(const JointSpec& j) {
  if (j.name.empty()) invalid("joint with empty name");
  if (j.dof_count > 3) invalid("joint '" + j.name + "': D_i exceeds 3");
  if (j.dof_count < 0) invalid("joint '" + j.name + "': negative dof_count");
  if (static_cast<int>(j.axes.size()) != j.dof_count)
    invalid("joint '" + j.name + "': axes count does not match dof_count");
  for (const auto& a : j.axes) {
    if (!finite(a) || std::abs(a.norm() - 1.0) > 1e-9)
      invalid("joint '" + j.name + "': axis is not unit norm");
  }
  if (j.dof_count >= 2) {
    Eigen::Matrix<double, 3, Eigen::Dynamic> A(3, j.dof_count);
    for (int k = 0; k < j.dof_count; ++k) A.col(k) = j.axes[k];
    Eigen::JacobiSVD<Eigen::Matrix<double, 3, Eigen::Dynamic>> svd(A);
    if (svd.singularValues().minCoeff() < 1e-9)
      invalid("joint '" + j.name + "': axes are linearly dependent");
  }
  if (!finite(j.fixed_orientation)) invalid("joint '" + j.name + "': non-finite fixed_orientation");
  if (!j.limits.empty() && static_cast<int>(j.limits.size()) != j.dof_count)
    invalid("joint '" + j.name + "': limits count does not match dof_count");
  for (const auto& [lo, hi] : j.limits) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) invalid("joint '" + j.name + "': limit min > max");
  }
}

template <class T>
std::map<std::string, int> unique_names(const std::vector<T>& items, const std::string& kind) {
  std::map<std::string, int> lookup;
  for (int i = 0; i < static_cast<int>(items.size()); ++i) {
    if (!lookup.emplace(items[i].name, i).second)
      invalid("duplicate " + kind + " name '" + items[i].name + "'");
  }
  return lookup;
}

}  // namespace

SkeletonModel::SkeletonModel(ModelDescription description) : desc_(std::move(description)) {
  if (desc_.segments.empty()) invalid("model has no segments");
  if (!finite(desc_.gravity)) invalid("non-finite gravity");
  for (const auto& s : desc_.segments) validate_segment(s);
  for (const auto& j : desc_.joints) validate_joint(j);
  auto seg_lookup = unique_names(desc_.segments, "segment");
  unique_names(desc_.joints, "joint");
  unique_names(desc_.muscles, "muscle");
  unique_names(desc_.markers, "marker");

  // Resolve the tree in file order, then reorder by preorder traversal.
  const int ns = segment_count();
  std::vector<int> file_parent(ns, -1), file_joint(ns, -1);
  std::vector<std::vector<int>> children(ns);
  for (int j = 0; j < joint_count(); ++j) {
    const auto& js = desc_.joints[j];
    auto p = seg_lookup.find(js.parent);
    auto c = seg_lookup.find(js.child);
    if (p == seg_lookup.end())
      invalid("joint '" + js.name + "': dangling reference to parent segment '" + js.parent + "'");
    if (c == seg_lookup.end())
      invalid("joint '" + js.name + "': dangling reference to child segment '" + js.child + "'");
    if (p->second == c->second) invalid("joint '" + js.name + "': cycle (parent equals child)");
    if (file_joint[c->second] != -1)
      invalid("segment '" + js.child + "' has more than one parent joint");
    file_parent[c->second] = p->second;
    file_joint[c->second] = j;
    children[p->second].push_back(c->second);
  }
  int root = -1;
  for (int i = 0; i < ns; ++i) {
    if (file_parent[i] == -1) {
      if (root != -1) invalid("segment graph has more than one root ('" + desc_.segments[root].name +
                              "', '" + desc_.segments[i].name + "')");
      root = i;
    }
  }
  if (root == -1) invalid("segment graph has a cycle (no root)");

  std::vector<int> order;
  order.reserve(ns);
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    order.push_back(s);
    for (auto it = children[s].rbegin(); it != children[s].rend(); ++it) stack.push_back(*it);
  }
  if (static_cast<int>(order.size()) != ns) invalid("segment graph has a cycle (unreachable segments)");

  std::vector<int> new_index(ns);
  for (int i = 0; i < ns; ++i) new_index[order[i]] = i;
  std::vector<SegmentSpec> segs;
  std::vector<JointSpec> joints;
  for (int i = 0; i < ns; ++i) {
    segs.push_back(desc_.segments[order[i]]);
    if (file_joint[order[i]] != -1) joints.push_back(desc_.joints[file_joint[order[i]]]);
  }
  desc_.segments = std::move(segs);
  desc_.joints = std::move(joints);

  segment_lookup_ = unique_names(desc_.segments, "segment");
  joint_lookup_ = unique_names(desc_.joints, "joint");
  marker_lookup_ = unique_names(desc_.markers, "marker");

  parent_.assign(ns, -1);
  inboard_joint_.assign(ns, -1);
  joint_child_.assign(joint_count(), -1);
  dof_offset_.assign(joint_count(), 0);
  rot_dof_ = 0;
  coord_names_ = {"T_x", "T_y", "T_z", "R_x", "R_y", "R_z"};
  std::vector<double> lo(6, -std::numeric_limits<double>::infinity());
  std::vector<double> hi(6, std::numeric_limits<double>::infinity());
  dof_segment_.assign(6, 0);
  for (int j = 0; j < joint_count(); ++j) {
    const auto& js = desc_.joints[j];
    const int c = segment_lookup_.at(js.child);
    parent_[c] = segment_lookup_.at(js.parent);
    inboard_joint_[c] = j;
    joint_child_[j] = c;
    dof_offset_[j] = 6 + rot_dof_;
    for (int k = 0; k < js.dof_count; ++k) {
      coord_names_.push_back(js.name + "_" + std::to_string(k));
      lo.push_back(js.limits.empty() ? -std::numeric_limits<double>::infinity() : js.limits[k].first);
      hi.push_back(js.limits.empty() ? std::numeric_limits<double>::infinity() : js.limits[k].second);
      dof_segment_.push_back(c);
    }
    rot_dof_ += js.dof_count;
  }
  lower_ = Eigen::Map<VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  upper_ = Eigen::Map<VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));

  subtree_end_.assign(ns, ns);
  for (int i = ns - 1; i >= 0; --i) {
    int end = i + 1;
    while (end < ns) {
      int a = end;
      while (a != -1 && a != i) a = parent_[a];
      if (a != i) break;
      end = subtree_end_[end];
    }
    subtree_end_[i] = end;
  }

  path_dofs_.assign(ns, {});
  for (int i = 0; i < ns; ++i) {
    std::vector<int> dofs;
    for (int s = i; s != -1; s = parent_[s]) {
      const int j = inboard_joint_[s];
      if (j == -1) continue;
      for (int k = desc_.joints[j].dof_count - 1; k >= 0; --k) dofs.push_back(dof_offset_[j] + k);
    }
    for (int k = 5; k >= 0; --k) dofs.push_back(k);
    std::reverse(dofs.begin(), dofs.end());
    path_dofs_[i] = std::move(dofs);
  }

  for (const auto& sp : desc_.contact_spheres) {
    auto it = segment_lookup_.find(sp.segment);
    if (it == segment_lookup_.end())
      invalid("contact sphere: dangling reference to segment '" + sp.segment + "'");
    if (!(sp.radius > 0.0)) invalid("contact sphere on '" + sp.segment + "': radius must be > 0");
    if (!(sp.k_n > 0.0)) invalid("contact sphere on '" + sp.segment + "': k_n must be > 0");
    if (!(sp.c_n >= 0.0)) invalid("contact sphere on '" + sp.segment + "': c_n must be >= 0");
    if (!(sp.mu >= 0.0)) invalid("contact sphere on '" + sp.segment + "': mu must be >= 0");
    if (!(sp.eps > 0.0)) invalid("contact sphere on '" + sp.segment + "': eps must be > 0");
    if (!finite(sp.local_position)) invalid("contact sphere on '" + sp.segment + "': non-finite position");
    sphere_segment_.push_back(it->second);
  }

  for (const auto& m : desc_.markers) {
    auto it = segment_lookup_.find(m.segment);
    if (it == segment_lookup_.end())
      invalid("marker '" + m.name + "': dangling reference to segment '" + m.segment + "'");
    if (!finite(m.local_position)) invalid("marker '" + m.name + "': non-finite position");
    marker_segment_.push_back(it->second);
  }

  for (const auto& m : desc_.muscles) {
    if (!(m.f_max > 0.0)) invalid("muscle '" + m.name + "': f_max must be > 0");
    if (!(m.optimal_fiber_length > 0.0)) invalid("muscle '" + m.name + "': optimal_fiber_length must be > 0");
    const auto& c = m.curves;
    if (!(c.fl_width > 0.0) || !(c.fv_max_eccentric >= 1.0) || !(c.fv_concentric_curvature > 0.0) ||
        !(c.max_contraction_velocity > 0.0) || !(c.passive_strain > 0.0) || !(c.passive_shape > 0.0))
      invalid("muscle '" + m.name + "': invalid curve parameters");
    std::vector<ResolvedArm> arms;
    for (const auto& a : m.moment_arms) {
      auto it = joint_lookup_.find(a.joint);
      if (it == joint_lookup_.end())
        invalid("muscle '" + m.name + "': dangling reference to joint '" + a.joint + "'");
      const auto& js = desc_.joints[it->second];
      if (a.dof < 0 || a.dof >= js.dof_count)
        invalid("muscle '" + m.name + "': dof " + std::to_string(a.dof) + " out of range for joint '" + a.joint + "'");
      if (!std::isfinite(a.r) || !std::isfinite(a.reference_angle))
        invalid("muscle '" + m.name + "': non-finite moment arm");
      arms.push_back({dof_offset_[it->second] + a.dof, a.r, a.reference_angle});
    }
    muscle_arms_.push_back(std::move(arms));
  }

  std::set<std::string> actuated_joints;
  for (const auto& a : desc_.actuators) {
    auto it = joint_lookup_.find(a.joint);
    if (it == joint_lookup_.end()) invalid("actuator: dangling reference to joint '" + a.joint + "'");
    if (!actuated_joints.insert(a.joint).second) invalid("duplicate actuator on joint '" + a.joint + "'");
    const auto& js = desc_.joints[it->second];
    if (static_cast<int>(a.bounds.size()) != js.dof_count)
      invalid("actuator on '" + a.joint + "': bounds count does not match dof_count");
    for (int k = 0; k < js.dof_count; ++k) {
      if (!std::isfinite(a.bounds[k]) || a.bounds[k] < 0.0)
        invalid("actuator on '" + a.joint + "': bounds must be nonnegative and finite");
      actuated_.emplace_back(dof_offset_[it->second] + k, a.bounds[k]);
    }
  }
}

std::optional<int> SkeletonModel::find_segment(const std::string& name) const {
  auto it = segment_lookup_.find(name);
  if (it == segment_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> SkeletonModel::find_joint(const std::string& name) const {
  auto it = joint_lookup_.find(name);
  if (it == joint_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> SkeletonModel::find_marker(const std::string& name) const {
  auto it = marker_lookup_.find(name);
  if (it == marker_lookup_.end()) return std::nullopt;
  return it->second;
}

int SkeletonModel::segment_index(const std::string& name) const {
  auto idx = find_segment(name);
  if (!idx) invalid("unknown segment '" + name + "'");
  return *idx;
}

double SkeletonModel::total_mass() const {
  double m = 0.0;
  for (const auto& s : desc_.segments) m += s.mass;
  return m;
}

GeneralizedState GeneralizedState::zero(const SkeletonModel& model) {
  return {VectorXd::Zero(model.dof()), VectorXd::Zero(model.dof())};
}

void check_dimensions(const SkeletonModel& model, const GeneralizedState& state) {
  if (state.q.size() != model.dof() || state.qdot.size() != model.dof()) {
    throw DimensionError("state has " + std::to_string(state.q.size()) + "/" +
                         std::to_string(state.qdot.size()) + " entries, model expects " +
                         std::to_string(model.dof()));
  }
}

GeneralizedState canonicalize(const GeneralizedState& state) {
  const Vector3d phi = state.R();
  const Vector3d phi_c = rot::canonical<double>(phi);
  if (phi_c == phi) return state;
  GeneralizedState out = state;
  out.R() = phi_c;
  const Vector3d omega = rot::left_jacobian<double>(phi) * state.qdot.segment<3>(3);
  out.qdot.segment<3>(3) = rot::left_jacobian<double>(phi_c).lu().solve(omega);
  return out;
}

// --- JSON ------------------------------------------------------------------

namespace {

Vector3d vec3(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) throw ParseError(std::string("field '") + key + "' must be a 3-vector");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Vector3d vec3_or(const json& j, const char* key, const Vector3d& fallback) {
  return j.contains(key) ? vec3(j, key) : fallback;
}

json to_array(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Matrix3d inertia_from(const json& j) {
  if (!j.contains("inertia")) return Matrix3d::Zero();
  const json& v = j.at("inertia");
  Matrix3d I;
  if (v.is_array() && v.size() == 3 && v[0].is_array()) {
    for (int r = 0; r < 3; ++r) {
      if (v[r].size() != 3) throw ParseError("field 'inertia' must be 3x3");
      for (int c = 0; c < 3; ++c) I(r, c) = v[r][c].get<double>();
    }
  } else if (v.is_array() && v.size() == 3) {
    I = Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>()).asDiagonal();
  } else {
    throw ParseError("field 'inertia' must be a 3x3 matrix or a 3-vector of principal moments");
  }
  return I;
}

}  // namespace

ModelDescription parse_description(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model parse error: ") + e.what());
  }
  try {
    ModelDescription d;
    d.name = j.value("name", std::string{});
    for (const auto& s : j.at("segments")) {
      SegmentSpec seg;
      seg.name = s.at("name").get<std::string>();
      seg.mass = s.value("mass", 0.0);
      seg.com = vec3_or(s, "com", Vector3d::Zero());
      seg.inertia = inertia_from(s);
      seg.local_offset = vec3_or(s, "local_offset", Vector3d::Zero());
      seg.scale = vec3_or(s, "scale", Vector3d::Ones());
      d.segments.push_back(std::move(seg));
    }
    for (const auto& js : j.value("joints", json::array())) {
      JointSpec jt;
      jt.name = js.at("name").get<std::string>();
      jt.parent = js.at("parent").get<std::string>();
      jt.child = js.at("child").get<std::string>();
      jt.dof_count = js.at("dof_count").get<int>();
      for (const auto& a : js.value("axes", json::array())) {
        if (!a.is_array() || a.size() != 3) throw ParseError("joint axes must be 3-vectors");
        jt.axes.emplace_back(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
      }
      jt.fixed_orientation = vec3_or(js, "fixed_orientation", Vector3d::Zero());
      for (const auto& l : js.value("limits", json::array())) {
        if (!l.is_array() || l.size() != 2) throw ParseError("joint limits must be [min, max] pairs");
        jt.limits.emplace_back(l[0].get<double>(), l[1].get<double>());
      }
      d.joints.push_back(std::move(jt));
    }
    for (const auto& cs : j.value("contact_spheres", json::array())) {
      ContactSphereSpec sp;
      sp.segment = cs.at("segment").get<std::string>();
      sp.local_position = vec3(cs, "local_position");
      sp.radius = cs.at("radius").get<double>();
      sp.k_n = cs.value("k_n", sp.k_n);
      sp.c_n = cs.value("c_n", sp.c_n);
      sp.mu = cs.value("mu", sp.mu);
      sp.eps = cs.value("eps", sp.eps);
      d.contact_spheres.push_back(std::move(sp));
    }
    for (const auto& ms : j.value("muscles", json::array())) {
      MuscleSpec m;
      m.name = ms.at("name").get<std::string>();
      m.f_max = ms.at("f_max").get<double>();
      m.optimal_fiber_length = ms.at("optimal_fiber_length").get<double>();
      for (const auto& a : ms.value("moment_arms", json::array())) {
        m.moment_arms.push_back({a.at("joint").get<std::string>(), a.value("dof", 0), a.at("r").get<double>(),
                                 a.value("reference_angle", 0.0)});
      }
      if (ms.contains("curves")) {
        const auto& c = ms.at("curves");
        m.curves.fl_width = c.value("fl_width", m.curves.fl_width);
        m.curves.fv_max_eccentric = c.value("fv_max_eccentric", m.curves.fv_max_eccentric);
        m.curves.fv_concentric_curvature = c.value("fv_concentric_curvature", m.curves.fv_concentric_curvature);
        m.curves.max_contraction_velocity = c.value("max_contraction_velocity", m.curves.max_contraction_velocity);
        m.curves.passive_strain = c.value("passive_strain", m.curves.passive_strain);
        m.curves.passive_shape = c.value("passive_shape", m.curves.passive_shape);
      }
      d.muscles.push_back(std::move(m));
    }
    for (const auto& as : j.value("actuators", json::array())) {
      ActuatorSpec a;
      a.joint = as.at("joint").get<std::string>();
      a.bounds = as.at("bounds").get<std::vector<double>>();
      d.actuators.push_back(std::move(a));
    }
    for (const auto& mk : j.value("markers", json::array())) {
      d.markers.push_back({mk.at("name").get<std::string>(), mk.at("segment").get<std::string>(),
                           vec3(mk, "local_position")});
    }
    d.gravity = vec3_or(j, "gravity", d.gravity);
    d.root_locked = j.value("root_locked", false);
    return d;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model schema error: ") + e.what());
  }
}

std::string serialize_model(const SkeletonModel& model) {
  const auto& d = model.description();
  json j;
  j["name"] = d.name;
  j["segments"] = json::array();
  for (const auto& s : d.segments) {
    json I = json::array();
    for (int r = 0; r < 3; ++r) I.push_back(json::array({s.inertia(r, 0), s.inertia(r, 1), s.inertia(r, 2)}));
    j["segments"].push_back({{"name", s.name},
                             {"mass", s.mass},
                             {"com", to_array(s.com)},
                             {"inertia", I},
                             {"local_offset", to_array(s.local_offset)},
                             {"scale", to_array(s.scale)}});
  }
  j["joints"] = json::array();
  for (const auto& jt : d.joints) {
    json axes = json::array();
    for (const auto& a : jt.axes) axes.push_back(to_array(a));
    json limits = json::array();
    for (const auto& [lo, hi] : jt.limits) limits.push_back(json::array({lo, hi}));
    j["joints"].push_back({{"name", jt.name},
                           {"parent", jt.parent},
                           {"child", jt.child},
                           {"dof_count", jt.dof_count},
                           {"axes", axes},
                           {"fixed_orientation", to_array(jt.fixed_orientation)},
                           {"limits", limits}});
  }
  j["contact_spheres"] = json::array();
  for (const auto& sp : d.contact_spheres) {
    j["contact_spheres"].push_back({{"segment", sp.segment},
                                    {"local_position", to_array(sp.local_position)},
                                    {"radius", sp.radius},
                                    {"k_n", sp.k_n},
                                    {"c_n", sp.c_n},
                                    {"mu", sp.mu},
                                    {"eps", sp.eps}});
  }
  j["muscles"] = json::array();
  for (const auto& m : d.muscles) {
    json arms = json::array();
    for (const auto& a : m.moment_arms)
      arms.push_back({{"joint", a.joint}, {"dof", a.dof}, {"r", a.r}, {"reference_angle", a.reference_angle}});
    const auto& c = m.curves;
    j["muscles"].push_back({{"name", m.name},
                            {"f_max", m.f_max},
                            {"optimal_fiber_length", m.optimal_fiber_length},
                            {"moment_arms", arms},
                            {"curves",
                             {{"fl_width", c.fl_width},
                              {"fv_max_eccentric", c.fv_max_eccentric},
                              {"fv_concentric_curvature", c.fv_concentric_curvature},
                              {"max_contraction_velocity", c.max_contraction_velocity},
                              {"passive_strain", c.passive_strain},
                              {"passive_shape", c.passive_shape}}}});
  }
  j["actuators"] = json::array();
  for (const auto& a : d.actuators) j["actuators"].push_back({{"joint", a.joint}, {"bounds", a.bounds}});
  j["markers"] = json::array();
  for (const auto& m : d.markers)
    j["markers"].push_back({{"name", m.name}, {"segment", m.segment}, {"local_position", to_array(m.local_position)}});
  j["gravity"] = to_array(d.gravity);
  j["root_locked"] = d.root_locked;
  return j.dump(2);
}

SkeletonModel parse_model(const std::string& text) { return SkeletonModel(parse_description(text)); }

SkeletonModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

void save_model(const SkeletonModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file '" + path + "'");
  out << serialize_model(model) << "\n";
}

SkeletonModel scale_model(const SkeletonModel& model, const std::map<std::string, Vector3d>& scales,
                          const ScaleOptions& options) {
  ModelDescription d = model.description();
  for (const auto& [name, s] : scales) {
    auto idx = model.find_segment(name);
    if (!idx) invalid("scale_model: unknown segment '" + name + "'");
    if (!s.allFinite() || (s.array() <= 0.0).any()) invalid("scale_model: nonpositive scale for '" + name + "'");
    auto& seg = d.segments[*idx];
    seg.scale = seg.scale.cwiseProduct(s);
    if (options.volumetric_mass) {
      // Second-moment tensor Sigma = tr(I)/2 * Id - I scales as S Sigma S
      // per unit mass.
      const double vol = s.prod();
      const Matrix3d sigma = 0.5 * seg.inertia.trace() * Matrix3d::Identity() - seg.inertia;
      const Matrix3d sigma_scaled = vol * s.asDiagonal() * sigma * s.asDiagonal();
      seg.inertia = sigma_scaled.trace() * Matrix3d::Identity() - sigma_scaled;
      seg.mass *= vol;
    }
  }
  return SkeletonModel(std::move(d));
}

}  // namespace msk
