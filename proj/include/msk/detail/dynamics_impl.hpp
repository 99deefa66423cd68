#pragma once

// Templated dynamics core: recursive Newton-Euler, Jacobian-sum mass matrix,
// Hunt-Crossley contact, Hill muscles and forward dynamics. Instantiated for
// double and for Dual (sensitivities, collocation Jacobians).

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "msk/detail/frames.hpp"

namespace msk::detail {

/// Generalized forces M qdd + C(q, qd) + g(q) by recursive Newton-Euler in
/// world coordinates (no contact, no muscles).
template <class S>
VecX<S> rnea(const SkeletonModel& model, const Frames<S>& f, const VecX<S>& qd, const VecX<S>& qdd,
             bool with_gravity = true) {
  const int ns = model.segment_count();
  std::vector<Vec3<S>> omega(ns), alpha(ns), acc(ns), force(ns), moment(ns);
  const Vec3<S> g = with_gravity ? Vec3<S>(model.gravity().template cast<S>()) : Vec3<S>::Zero();

  const Vec3<S> phid = qd.template segment<3>(3);
  omega[0] = f.root_jacobian * phid;
  alpha[0] = f.root_jacobian * Vec3<S>(qdd.template segment<3>(3)) + rot::left_jacobian_dot<S>(f.phi, phid) * phid;
  acc[0] = qdd.template segment<3>(0);

  for (int i = 1; i < ns; ++i) {
    const int par = model.parent(i);
    const int j = model.inboard_joint(i);
    const int off = model.dof_offset(j);
    const Vec3<S> d = f.p[i] - f.p[par];
    acc[i] = acc[par] + alpha[par].cross(d) + omega[par].cross(omega[par].cross(d));
    Vec3<S> w = omega[par];
    Vec3<S> a = alpha[par];
    for (int k = 0; k < model.joints()[j].dof_count; ++k) {
      const Vec3<S>& ax = f.axis[off + k];
      a += ax * qdd(off + k) + w.cross(ax) * qd(off + k);
      w += ax * qd(off + k);
    }
    omega[i] = w;
    alpha[i] = a;
  }

  for (int i = 0; i < ns; ++i) {
    const auto& seg = model.segments()[i];
    const Vec3<S> r = f.R[i] * scaled<S>(seg.com, seg.scale);
    const Vec3<S> a_com = acc[i] + alpha[i].cross(r) + omega[i].cross(omega[i].cross(r));
    const Mat3<S> I_w = f.R[i] * seg.inertia.template cast<S>() * f.R[i].transpose();
    const Vec3<S> fi = (a_com - g) * S(seg.mass);
    force[i] = fi;
    moment[i] = I_w * alpha[i] + omega[i].cross(Vec3<S>(I_w * omega[i])) + r.cross(fi);
  }

  VecX<S> Q = VecX<S>::Zero(model.dof());
  for (int i = ns - 1; i >= 1; --i) {
    const int par = model.parent(i);
    const int j = model.inboard_joint(i);
    const int off = model.dof_offset(j);
    for (int k = 0; k < model.joints()[j].dof_count; ++k) Q(off + k) = f.axis[off + k].dot(moment[i]);
    force[par] += force[i];
    moment[par] += moment[i] + Vec3<S>(f.p[i] - f.p[par]).cross(force[i]);
  }
  Q.template segment<3>(0) = force[0];
  Q.template segment<3>(3) = f.root_jacobian.transpose() * moment[0];
  return Q;
}

/// M(q) = sum_i m_i Jv_i^T Jv_i + Jw_i^T I_i Jw_i over segment COMs.
template <class S>
MatX<S> mass_matrix(const SkeletonModel& model, const Frames<S>& f) {
  const int n = model.dof();
  MatX<S> M = MatX<S>::Zero(n, n);
  for (int i = 0; i < model.segment_count(); ++i) {
    const auto& seg = model.segments()[i];
    if (seg.mass == 0.0 && seg.inertia.isZero(0.0)) continue;
    const Vec3<S> c = world_point<S>(model, f, i, seg.com);
    const MatX<S> Jv = point_jacobian_compact<S>(model, f, i, c);
    const MatX<S> Jw = angular_jacobian_compact<S>(model, f, i);
    const Mat3<S> I_w = f.R[i] * seg.inertia.template cast<S>() * f.R[i].transpose();
    const MatX<S> block = (Jv.transpose() * Jv) * S(seg.mass) + Jw.transpose() * I_w * Jw;
    const auto& path = model.path_dofs(i);
    for (std::size_t a = 0; a < path.size(); ++a)
      for (std::size_t b = 0; b < path.size(); ++b)
        M(path[a], path[b]) += block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  return M;
}

template <class S>
struct ContactEval {
  VecX<S> generalized;                       ///< J_C^T lambda
  std::vector<Vec3<S>> normal, tangential;   ///< per sphere
  std::vector<Vec3<S>> centres;              ///< per sphere, world
};

template <class S>
S safe_norm(const Vec3<S>& v) {
  using std::sqrt;
  const S sq = v.dot(v);
  if (value_of(sq) == 0.0) return S(0.0);
  return sqrt(sq);
}

/// Compliant Hunt-Crossley contact against the ground plane y = 0.
template <class S>
ContactEval<S> contact(const SkeletonModel& model, const Frames<S>& f, const VecX<S>& qd) {
  using std::pow;
  const int K = model.sphere_count();
  ContactEval<S> out;
  out.generalized = VecX<S>::Zero(model.dof());
  out.normal.assign(K, Vec3<S>::Zero());
  out.tangential.assign(K, Vec3<S>::Zero());
  out.centres.resize(K);
  const Vec3<S> n(S(0.0), S(1.0), S(0.0));
  for (int k = 0; k < K; ++k) {
    const auto& sp = model.contact_spheres()[k];
    const int s = model.sphere_segment(k);
    const Vec3<S> x = world_point<S>(model, f, s, sp.local_position);
    out.centres[k] = x;
    const S depth = S(sp.radius) - x.dot(n);
    if (!(value_of(depth) > 0.0)) continue;
    const MatX<S> J = point_jacobian_compact<S>(model, f, s, x);
    const auto& path = model.path_dofs(s);
    Vec3<S> v = Vec3<S>::Zero();
    for (std::size_t c = 0; c < path.size(); ++c) v += J.col(static_cast<Eigen::Index>(c)) * qd(path[c]);
    const S depth_rate = -v.dot(n);
    S fn = S(sp.k_n) * pow(depth, 1.5) * (1.0 + S(sp.c_n) * depth_rate);
    if (value_of(fn) < 0.0) fn = S(0.0);  // no adhesion
    const Vec3<S> Fn = n * fn;
    const Vec3<S> vt = v - n * v.dot(n);
    const Vec3<S> Ft = vt * (-S(sp.mu) * fn / (safe_norm<S>(vt) + S(sp.eps)));
    out.normal[k] = Fn;
    out.tangential[k] = Ft;
    const Vec3<S> F = Fn + Ft;
    for (std::size_t c = 0; c < path.size(); ++c)
      out.generalized(path[c]) += J.col(static_cast<Eigen::Index>(c)).dot(F);
  }
  return out;
}

/// J_C^T lambda for prescribed per-sphere forces (3K vector).
template <class S>
VecX<S> prescribed_contact(const SkeletonModel& model, const Frames<S>& f, const VectorXd& forces) {
  VecX<S> Q = VecX<S>::Zero(model.dof());
  for (int k = 0; k < model.sphere_count(); ++k) {
    const Vec3<S> F = forces.segment<3>(3 * k).template cast<S>();
    const int s = model.sphere_segment(k);
    const Vec3<S> x = world_point<S>(model, f, s, model.contact_spheres()[k].local_position);
    const MatX<S> J = point_jacobian_compact<S>(model, f, s, x);
    const auto& path = model.path_dofs(s);
    for (std::size_t c = 0; c < path.size(); ++c) Q(path[c]) += J.col(static_cast<Eigen::Index>(c)).dot(F);
  }
  return Q;
}

/// Normalized force-length curve: Gaussian bump with f_l(1) = 1.
template <class S>
S force_length(const MuscleCurves& c, const S& l_norm) {
  using std::exp;
  const S z = (l_norm - 1.0) / c.fl_width;
  return exp(-(z * z));
}

/// Normalized force-velocity curve; v_norm > 0 is lengthening. Hill
/// hyperbola for shortening, C1-matched saturating branch toward
/// fv_max_eccentric for lengthening; f_v(0) = 1.
template <class S>
S force_velocity(const MuscleCurves& c, const S& v_norm) {
  const double A = c.fv_concentric_curvature;
  if (value_of(v_norm) <= -1.0) return S(0.0);
  if (value_of(v_norm) <= 0.0) return (1.0 + v_norm) / (1.0 - v_norm / A);
  const double rate = (1.0 + 1.0 / A) / (c.fv_max_eccentric - 1.0);
  return c.fv_max_eccentric - (c.fv_max_eccentric - 1.0) / (1.0 + rate * v_norm);
}

/// Passive elastic force normalized by F_max: exponential toe region,
/// zero at and below the optimal length.
template <class S>
S passive_force(const MuscleCurves& c, const S& l_norm) {
  using std::exp;
  if (value_of(l_norm) <= 1.0) return S(0.0);
  return (exp(c.passive_shape * (l_norm - 1.0) / c.passive_strain) - 1.0) / (std::exp(c.passive_shape) - 1.0);
}

/// Muscle tendon force F_j(a, l, v) with the constant-moment-arm path model
/// l = l_opt - sum r (q - q_ref), v = -sum r qdot.
template <class S>
S muscle_force(const SkeletonModel& model, int j, const S& activation, const VecX<S>& q, const VecX<S>& qd) {
  const auto& m = model.muscles()[j];
  S l(m.optimal_fiber_length);
  S v(0.0);
  for (const auto& arm : model.muscle_arms(j)) {
    l -= arm.r * (q(arm.index) - arm.reference_angle);
    v -= arm.r * qd(arm.index);
  }
  const S l_norm = l / m.optimal_fiber_length;
  const S v_norm = v / (m.optimal_fiber_length * m.curves.max_contraction_velocity);
  return activation * m.f_max * force_length<S>(m.curves, l_norm) * force_velocity<S>(m.curves, v_norm) +
         m.f_max * passive_force<S>(m.curves, l_norm);
}

/// Generalized muscle torques sum_j r_ij F_j.
template <class S>
VecX<S> muscle_generalized(const SkeletonModel& model, const VecX<S>& activations, const VecX<S>& q,
                           const VecX<S>& qd) {
  VecX<S> tau = VecX<S>::Zero(model.dof());
  for (int j = 0; j < model.muscle_count(); ++j) {
    const S F = muscle_force<S>(model, j, activations(j), q, qd);
    for (const auto& arm : model.muscle_arms(j)) tau(arm.index) += arm.r * F;
  }
  return tau;
}

/// Solves M x = b for symmetric positive definite M.
inline VectorXd solve_spd(const MatrixXd& M, const VectorXd& b) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
  return llt.solve(b);
}

inline VecX<Dual> solve_spd(const MatX<Dual>& M, const VecX<Dual>& b) {
  const MatrixXd Mv = M.unaryExpr([](const Dual& x) { return x.v; });
  const MatrixXd Md = M.unaryExpr([](const Dual& x) { return x.d; });
  const VectorXd bv = b.unaryExpr([](const Dual& x) { return x.v; });
  const VectorXd bd = b.unaryExpr([](const Dual& x) { return x.d; });
  Eigen::LLT<MatrixXd> llt(Mv);
  if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
  const VectorXd xv = llt.solve(bv);
  const VectorXd xd = llt.solve(bd - Md * xv);
  VecX<Dual> x(xv.size());
  for (Eigen::Index i = 0; i < xv.size(); ++i) x(i) = Dual(xv(i), xd(i));
  return x;
}

/// qdd from M qdd = generalized - bias. With a locked root the first six
/// accelerations are zero and only the joint block is solved.
template <class S>
VecX<S> solve_accelerations(const SkeletonModel& model, const MatX<S>& M, const VecX<S>& rhs) {
  const int n = model.dof();
  if (!model.root_locked()) return solve_spd(M, rhs);
  VecX<S> qdd = VecX<S>::Zero(n);
  const int r = model.rot_dof();
  if (r > 0) qdd.tail(r) = solve_spd(MatX<S>(M.bottomRightCorner(r, r)), VecX<S>(rhs.tail(r)));
  return qdd;
}

}  // namespace msk::detail
