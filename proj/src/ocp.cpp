#include "msk/ocp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "msk/detail/dynamics_impl.hpp"
#include "msk/log.hpp"

namespace msk {

OcpWeights OcpWeights::parse(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("weights must be four comma-separated numbers, got '" + text + "'");
    }
  }
  if (v.size() != 4) throw ValidationError("weights must be four comma-separated numbers, got '" + text + "'");
  for (double w : v)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be finite and nonnegative");
  return {v[0], v[1], v[2], v[3]};
}

int OcpProblem::control_count() const {
  return model.muscle_count() + static_cast<int>(model.actuated_dofs().size());
}

void OcpProblem::validate() const {
  const int N = knots();
  if (N < 2) throw ValidationError("OCP grid needs at least 2 knots");
  const double h = times[1] - times[0];
  if (!(h > 0.0)) throw ValidationError("OCP grid must be increasing");
  for (int k = 1; k < N; ++k)
    if (std::abs((times[k] - times[k - 1]) - h) > 1e-9 * std::max(1.0, std::abs(times[k])))
      throw ValidationError("OCP grid must be uniform");
  const auto check = [&](const std::vector<VectorXd>& v, const char* what) {
    if (static_cast<int>(v.size()) != N)
      throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) + " frames, grid has " +
                           std::to_string(N));
    for (const auto& x : v)
      if (x.size() != model.dof()) throw DimensionError(std::string(what) + " frame has wrong dimension");
  };
  check(q_ref, "q reference");
  check(qdot_ref, "qdot reference");
  check(qddot_ref, "qddot reference");
  for (double w : {weights.effort, weights.q, weights.qdot, weights.qddot})
    if (!(w >= 0.0)) throw ValidationError("OCP weights must be nonnegative");
  if (contact == ContactInput::Mode::prescribed)
    throw ValidationError("OCP contact must be 'none' or 'automatic'");
  if (!state_guess.empty()) {
    if (static_cast<int>(state_guess.size()) != N) throw DimensionError("state guess has wrong length");
    for (const auto& x : state_guess)
      if (x.size() != 2 * model.dof()) throw DimensionError("state guess frame has wrong dimension");
  }
  if (!control_guess.empty()) {
    if (static_cast<int>(control_guess.size()) != N) throw DimensionError("control guess has wrong length");
    for (const auto& u : control_guess)
      if (u.size() != control_count()) throw DimensionError("control guess frame has wrong dimension");
  }
}

namespace {

template <class S>
VecX<S> torque_of(const SkeletonModel& model, const VecX<S>& u, const VecX<S>& q, const VecX<S>& qd) {
  const int nm = model.muscle_count();
  VecX<S> tau = VecX<S>::Zero(model.dof());
  if (nm > 0) tau = detail::muscle_generalized<S>(model, VecX<S>(u.head(nm)), q, qd);
  const auto& act = model.actuated_dofs();
  for (std::size_t a = 0; a < act.size(); ++a) tau(act[a].first) += act[a].second * u(nm + static_cast<int>(a));
  return tau;
}

void check_controls(const SkeletonModel& model, const VectorXd& u) {
  const int m = model.muscle_count() + static_cast<int>(model.actuated_dofs().size());
  if (u.size() != m)
    throw DimensionError("control vector has " + std::to_string(u.size()) + " entries, model expects " +
                         std::to_string(m));
}

}  // namespace

VectorXd control_torque(const SkeletonModel& model, const VectorXd& u, const GeneralizedState& state) {
  check_dimensions(model, state);
  check_controls(model, u);
  return torque_of<double>(model, u, state.q, state.qdot);
}

VectorXd control_lower(const SkeletonModel& model) {
  VectorXd lo(model.muscle_count() + model.actuated_dofs().size());
  lo.head(model.muscle_count()).setZero();
  lo.tail(model.actuated_dofs().size()).setConstant(-1.0);
  return lo;
}

VectorXd control_upper(const SkeletonModel& model) {
  return VectorXd::Ones(model.muscle_count() + model.actuated_dofs().size());
}

namespace {

// Dynamics at one knot and its Jacobians with respect to the knot state and
// controls.
struct KnotEval {
  VectorXd f;  // [qd; qdd]
  MatrixXd A;  // d f / d x
  MatrixXd B;  // d f / d u
};

VectorXd knot_rhs(const SkeletonModel& model, ContactInput::Mode mode, const VectorXd& x, const VectorXd& u) {
  const int d = model.dof();
  const VectorXd q = x.head(d), qd = x.tail(d);
  const auto fr = detail::compute_frames<double>(model, q);
  VectorXd r = torque_of<double>(model, u, q, qd) - detail::rnea<double>(model, fr, qd, VectorXd::Zero(d), true);
  if (mode == ContactInput::Mode::automatic) r += detail::contact<double>(model, fr, qd).generalized;
  const MatrixXd M = detail::mass_matrix<double>(model, fr);
  VectorXd f(2 * d);
  f.head(d) = qd;
  f.tail(d) = detail::solve_accelerations<double>(model, M, r);
  return f;
}

// q'' solves g(y, q'') = ID(q, qd, q'') - contact - tau(u) = 0, so
// d q'' / d y = -M^-1 dg/dy with q'' held fixed. Each state direction is one
// dual pass through the recursive Newton-Euler terms.
KnotEval knot_eval(const SkeletonModel& model, ContactInput::Mode mode, const VectorXd& x, const VectorXd& u) {
  const int d = model.dof();
  const int m = static_cast<int>(u.size());
  const int nm = model.muscle_count();
  KnotEval out;
  const VectorXd q = x.head(d), qd = x.tail(d);
  const auto fr = detail::compute_frames<double>(model, q);
  VectorXd r = torque_of<double>(model, u, q, qd) - detail::rnea<double>(model, fr, qd, VectorXd::Zero(d), true);
  if (mode == ContactInput::Mode::automatic) r += detail::contact<double>(model, fr, qd).generalized;
  const MatrixXd M = detail::mass_matrix<double>(model, fr);
  const VectorXd qdd = detail::solve_accelerations<double>(model, M, r);
  out.f.resize(2 * d);
  out.f << qd, qdd;

  MatrixXd G(d, 2 * d + m);  // dg/dx | dg/du
  const VecX<Dual> qdd_c = qdd.cast<Dual>();
  const VecX<Dual> u_c = u.cast<Dual>();
  for (int j = 0; j < 2 * d; ++j) {
    VecX<Dual> qD = q.cast<Dual>(), qdD = qd.cast<Dual>();
    if (j < d)
      qD(j).d = 1.0;
    else
      qdD(j - d).d = 1.0;
    const auto frD = detail::compute_frames<Dual>(model, qD);
    VecX<Dual> g = detail::rnea<Dual>(model, frD, qdD, qdd_c, true) - torque_of<Dual>(model, u_c, qD, qdD);
    if (mode == ContactInput::Mode::automatic) g -= detail::contact<Dual>(model, frD, qdD).generalized;
    for (int i = 0; i < d; ++i) G(i, j) = g(i).d;
  }
  G.rightCols(m).setZero();
  for (int jm = 0; jm < nm; ++jm) {
    const double slope = detail::muscle_force<double>(model, jm, 1.0, q, qd) -
                         detail::muscle_force<double>(model, jm, 0.0, q, qd);
    for (const auto& arm : model.muscle_arms(jm)) G(arm.index, 2 * d + jm) -= arm.r * slope;
  }
  const auto& act = model.actuated_dofs();
  for (std::size_t a = 0; a < act.size(); ++a) G(act[a].first, 2 * d + nm + static_cast<int>(a)) -= act[a].second;

  MatrixXd dqdd = MatrixXd::Zero(d, 2 * d + m);
  if (model.root_locked()) {
    const int rd = model.rot_dof();
    if (rd > 0) {
      Eigen::LLT<MatrixXd> llt(M.bottomRightCorner(rd, rd));
      if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
      dqdd.bottomRows(rd) = -llt.solve(G.bottomRows(rd));
    }
  } else {
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
    dqdd = -llt.solve(G);
  }
  out.A = MatrixXd::Zero(2 * d, 2 * d);
  out.A.topRightCorner(d, d).setIdentity();
  out.A.bottomRows(d) = dqdd.leftCols(2 * d);
  out.B = MatrixXd::Zero(2 * d, m);
  out.B.bottomRows(d) = dqdd.rightCols(m);
  return out;
}

double trapezoid_weight(int k, int N, double h) { return (k == 0 || k == N - 1) ? 0.5 * h : h; }

}  // namespace

Transcription::Transcription(const OcpProblem& problem) : p_(problem) {
  p_.validate();
  N_ = p_.knots();
  d_ = p_.model.dof();
  m_ = p_.control_count();
}

VectorXd Transcription::pack(const std::vector<VectorXd>& states, const std::vector<VectorXd>& controls) const {
  if (static_cast<int>(states.size()) != N_ || static_cast<int>(controls.size()) != N_)
    throw DimensionError("pack: need one state and one control per knot");
  VectorXd z(decision_size());
  for (int k = 0; k < N_; ++k) {
    if (states[k].size() != 2 * d_ || controls[k].size() != m_) throw DimensionError("pack: wrong knot dimension");
    z.segment(2 * d_ * k, 2 * d_) = states[k];
    z.segment(2 * d_ * N_ + m_ * k, m_) = controls[k];
  }
  return z;
}

VectorXd Transcription::rhs(const VectorXd& z, int k) const {
  VectorXd f = knot_rhs(p_.model, p_.contact, state(z, k), control(z, k));
  if (!f.allFinite()) throw NumericalError("non-finite dynamics at knot " + std::to_string(k));
  return f;
}

void Transcription::rhs_jacobian(const VectorXd& z, int k, MatrixXd& A, MatrixXd& B) const {
  auto e = knot_eval(p_.model, p_.contact, state(z, k), control(z, k));
  A = std::move(e.A);
  B = std::move(e.B);
}

VectorXd Transcription::defects(const VectorXd& z) const {
  if (z.size() != decision_size()) throw DimensionError("decision vector has wrong dimension");
  const double h = p_.times[1] - p_.times[0];
  VectorXd c(defect_size());
  VectorXd f_prev = rhs(z, 0);
  for (int k = 0; k + 1 < N_; ++k) {
    const VectorXd f_next = rhs(z, k + 1);
    c.segment(2 * d_ * k, 2 * d_) = state(z, k + 1) - state(z, k) - 0.5 * h * (f_prev + f_next);
    f_prev = f_next;
  }
  return c;
}

ObjectiveBreakdown Transcription::objective(const VectorXd& z) const {
  if (z.size() != decision_size()) throw DimensionError("decision vector has wrong dimension");
  const double h = p_.times[1] - p_.times[0];
  ObjectiveBreakdown b;
  const auto& w = p_.weights;
  for (int k = 0; k < N_; ++k) {
    const double wk = trapezoid_weight(k, N_, h);
    const VectorXd x = state(z, k);
    b.effort += wk * w.effort * control(z, k).squaredNorm();
    b.q += wk * w.q * (x.head(d_) - p_.q_ref[k]).squaredNorm();
    b.qdot += wk * w.qdot * (x.tail(d_) - p_.qdot_ref[k]).squaredNorm();
    if (w.qddot > 0.0) b.qddot += wk * w.qddot * (rhs(z, k).tail(d_) - p_.qddot_ref[k]).squaredNorm();
  }
  return b;
}

// A locked root stays at the first reference pose with zero velocity.
void Transcription::pin_locked_root(VectorXd& bound) const {
  if (!p_.model.root_locked()) return;
  for (int k = 0; k < N_; ++k) {
    bound.segment(2 * d_ * k, 6) = p_.q_ref.front().head(6);
    bound.segment(2 * d_ * k + d_, 6).setZero();
  }
}

VectorXd Transcription::lower_bounds() const {
  VectorXd lo = VectorXd::Constant(decision_size(), -std::numeric_limits<double>::infinity());
  const VectorXd cl = control_lower(p_.model);
  for (int k = 0; k < N_; ++k) lo.segment(2 * d_ * N_ + m_ * k, m_) = cl;
  pin_locked_root(lo);
  return lo;
}

VectorXd Transcription::upper_bounds() const {
  VectorXd hi = VectorXd::Constant(decision_size(), std::numeric_limits<double>::infinity());
  const VectorXd cu = control_upper(p_.model);
  for (int k = 0; k < N_; ++k) hi.segment(2 * d_ * N_ + m_ * k, m_) = cu;
  pin_locked_root(hi);
  return hi;
}

std::string to_string(OcpStatus status) {
  switch (status) {
    case OcpStatus::converged: return "converged";
    case OcpStatus::max_iterations: return "max-iter";
    case OcpStatus::stalled: return "stalled";
  }
  return "stalled";
}

namespace {

using Sparse = Eigen::SparseMatrix<double>;

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
using Triplet = Eigen::Triplet<double>;

// Stacked least-squares residual of the augmented Lagrangian merit
//   J(z) + lam' c + mu |c|^2 = |R(z)|^2 - |lam|^2 / (4 mu),
// R = [objective residuals; sqrt(mu) (c + lam / (2 mu))].
class Merit {
 public:
  Merit(const Transcription& t) : t_(t), p_(t.problem()) {
    N_ = p_.knots();
    d_ = p_.model.dof();
    m_ = p_.control_count();
    h_ = p_.times[1] - p_.times[0];
  }

  struct Eval {
    VectorXd R;
    VectorXd c;
    std::vector<VectorXd> f;
    double value = 0.0;
  };

  // Returns false on non-finite dynamics (knot index in bad_knot).
  bool evaluate(const VectorXd& z, const VectorXd& lam, double mu, Eval& e, int& bad_knot) const {
    e.f.resize(N_);
    for (int k = 0; k < N_; ++k) {
      e.f[k] = knot_rhs(p_.model, p_.contact, t_.state(z, k), t_.control(z, k));
      if (!e.f[k].allFinite()) {
        bad_knot = k;
        return false;
      }
    }
    e.c.resize(t_.defect_size());
    for (int k = 0; k + 1 < N_; ++k)
      e.c.segment(2 * d_ * k, 2 * d_) = t_.state(z, k + 1) - t_.state(z, k) - 0.5 * h_ * (e.f[k] + e.f[k + 1]);
    const int block = m_ + 3 * d_;
    e.R.resize(N_ * block + t_.defect_size());
    const auto& w = p_.weights;
    for (int k = 0; k < N_; ++k) {
      const double wk = trapezoid_weight(k, N_, h_);
      const VectorXd x = t_.state(z, k);
      auto r = e.R.segment(k * block, block);
      r.head(m_) = std::sqrt(wk * w.effort) * t_.control(z, k);
      r.segment(m_, d_) = std::sqrt(wk * w.q) * (x.head(d_) - p_.q_ref[k]);
      r.segment(m_ + d_, d_) = std::sqrt(wk * w.qdot) * (x.tail(d_) - p_.qdot_ref[k]);
      r.segment(m_ + 2 * d_, d_) = std::sqrt(wk * w.qddot) * (e.f[k].tail(d_) - p_.qddot_ref[k]);
    }
    e.R.tail(t_.defect_size()) = std::sqrt(mu) * (e.c + lam / (2.0 * mu));
    e.value = e.R.squaredNorm();
    return true;
  }

  Sparse jacobian(const VectorXd& z, double mu) const {
    std::vector<KnotEval> ke(N_);
    for (int k = 0; k < N_; ++k) ke[k] = knot_eval(p_.model, p_.contact, t_.state(z, k), t_.control(z, k));
    std::vector<Triplet> tr;
    const int block = m_ + 3 * d_;
    const int xoff = 0, uoff = 2 * d_ * N_;
    const auto& w = p_.weights;
    auto dense = [&](int r0, int c0, const MatrixXd& B, double s) {
      for (Eigen::Index j = 0; j < B.cols(); ++j)
        for (Eigen::Index i = 0; i < B.rows(); ++i)
          if (B(i, j) != 0.0) tr.emplace_back(r0 + i, c0 + j, s * B(i, j));
    };
    for (int k = 0; k < N_; ++k) {
      const double wk = trapezoid_weight(k, N_, h_);
      const int r0 = k * block;
      const int xc = xoff + 2 * d_ * k, uc = uoff + m_ * k;
      const double se = std::sqrt(wk * w.effort), sq = std::sqrt(wk * w.q), sv = std::sqrt(wk * w.qdot),
                   sa = std::sqrt(wk * w.qddot);
      if (se > 0.0)
        for (int i = 0; i < m_; ++i) tr.emplace_back(r0 + i, uc + i, se);
      if (sq > 0.0)
        for (int i = 0; i < d_; ++i) tr.emplace_back(r0 + m_ + i, xc + i, sq);
      if (sv > 0.0)
        for (int i = 0; i < d_; ++i) tr.emplace_back(r0 + m_ + d_ + i, xc + d_ + i, sv);
      if (sa > 0.0) {
        dense(r0 + m_ + 2 * d_, xc, ke[k].A.bottomRows(d_), sa);
        dense(r0 + m_ + 2 * d_, uc, ke[k].B.bottomRows(d_), sa);
      }
    }
    const double sm = std::sqrt(mu);
    const int c0 = N_ * block;
    const MatrixXd I = MatrixXd::Identity(2 * d_, 2 * d_);
    for (int k = 0; k + 1 < N_; ++k) {
      const int r0 = c0 + 2 * d_ * k;
      dense(r0, xoff + 2 * d_ * k, -I - 0.5 * h_ * ke[k].A, sm);
      dense(r0, xoff + 2 * d_ * (k + 1), I - 0.5 * h_ * ke[k + 1].A, sm);
      dense(r0, uoff + m_ * k, -0.5 * h_ * ke[k].B, sm);
      dense(r0, uoff + m_ * (k + 1), -0.5 * h_ * ke[k + 1].B, sm);
    }
    Sparse J(N_ * block + t_.defect_size(), t_.decision_size());
    J.setFromTriplets(tr.begin(), tr.end());
    return J;
  }

 private:
  const Transcription& t_;
  const OcpProblem& p_;
  int N_, d_, m_;
  double h_;
};

VectorXd clamp(const VectorXd& z, const VectorXd& lo, const VectorXd& hi) { return z.cwiseMax(lo).cwiseMin(hi); }

// Free variables: not held at a bound by a gradient pushing outward.
std::vector<char> free_set(const VectorXd& z, const VectorXd& g, const VectorXd& lo, const VectorXd& hi) {
  std::vector<char> f(z.size(), 1);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (lo(i) == hi(i)) f[i] = 0;
    if (z(i) <= lo(i) && g(i) > 0.0) f[i] = 0;
    if (z(i) >= hi(i) && g(i) < 0.0) f[i] = 0;
  }
  return f;
}

struct InnerResult {
  int iterations = 0;
  bool converged = false;
};

// Projected Levenberg-Marquardt on |R(z)|^2 with box bounds.
InnerResult minimize_merit(const Merit& merit, VectorXd& z, const VectorXd& lam, double mu, const VectorXd& lo,
                           const VectorXd& hi, const OcpSolverOptions& opt, Merit::Eval& e,
                           std::vector<double>& trace) {
  InnerResult res;
  int bad = -1;
  if (!merit.evaluate(z, lam, mu, e, bad)) throw NumericalError("non-finite dynamics at knot " + std::to_string(bad));
  const double shift = lam.squaredNorm() / (4.0 * mu);
  trace.push_back(e.value - shift);
  double damping = 1e-3;
  Sparse J = merit.jacobian(z, mu);
  VectorXd g = J.transpose() * e.R;
  const Eigen::Index n = z.size();
  int small_steps = 0;
  for (; res.iterations < opt.max_inner_iterations; ++res.iterations) {
    const auto fr = free_set(z, g, lo, hi);
    double pg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (fr[i]) pg = std::max(pg, std::abs(g(i)));
    if (pg <= 1e-10 * std::max(1.0, std::sqrt(e.value))) {
      res.converged = true;
      break;
    }
    Sparse H = J.transpose() * J;
    std::vector<Triplet> mask;
    for (Eigen::Index i = 0; i < n; ++i) mask.emplace_back(i, i, fr[i] ? 1.0 : 0.0);
    Sparse P(n, n);
    P.setFromTriplets(mask.begin(), mask.end());
    Sparse Hf = P * H * P;
    VectorXd diag = H.diagonal();
    const double floor = 1e-9 * std::max(1.0, diag.maxCoeff());
    VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = fr[i] ? -g(i) : 0.0;
    bool accepted = false;
    while (damping < 1e10) {
      Sparse A = Hf;
      for (Eigen::Index i = 0; i < n; ++i)
        A.coeffRef(i, i) += fr[i] ? damping * (diag(i) + floor) : 1.0;
      Eigen::SimplicialLDLT<Sparse> ldlt(A);
      if (ldlt.info() != Eigen::Success) {
        damping *= 10.0;
        continue;
      }
      const VectorXd step = ldlt.solve(rhs);
      const VectorXd trial = clamp(z + step, lo, hi);
      Merit::Eval et;
      if (merit.evaluate(trial, lam, mu, et, bad) && et.value < e.value) {
        const double decrease = e.value - et.value;
        z = trial;
        e = std::move(et);
        trace.push_back(e.value - shift);
        damping = std::max(damping * 0.5, 1e-12);
        accepted = true;
        // Two consecutive negligible reductions end the subproblem.
        small_steps = decrease <= opt.relative_decrease * e.value ? small_steps + 1 : 0;
        if (small_steps >= 2) {
          res.converged = true;
          ++res.iterations;
          return res;
        }
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) {
      res.converged = true;  // no further decrease at working precision
      break;
    }
    J = merit.jacobian(z, mu);
    g = J.transpose() * e.R;
    if (log_level() >= LogLevel::debug)
      log_debug("  inner " + std::to_string(res.iterations) + " merit " + fmt_g(e.value) + " damping " +
                std::to_string(damping) + " pg " + std::to_string(pg) + " cinf " +
                std::to_string(e.c.cwiseAbs().maxCoeff()));
  }
  return res;
}

}  // namespace

OcpSolution solve_ocp(const OcpProblem& problem) {
  const Transcription t(problem);
  const int N = problem.knots();
  const int d = problem.model.dof();
  const auto& opt = problem.solver;

  std::vector<VectorXd> xs = problem.state_guess, us = problem.control_guess;
  if (xs.empty())
    for (int k = 0; k < N; ++k) {
      VectorXd x(2 * d);
      x << problem.q_ref[k], problem.qdot_ref[k];
      xs.push_back(x);
    }
  if (us.empty()) us.assign(N, VectorXd::Zero(problem.control_count()));
  const VectorXd lo = t.lower_bounds(), hi = t.upper_bounds();
  VectorXd z = clamp(t.pack(xs, us), lo, hi);

  const Merit merit(t);
  VectorXd lam = VectorXd::Zero(t.defect_size());
  double mu = opt.initial_penalty;
  OcpSolution sol;
  sol.status = OcpStatus::max_iterations;
  double prev_defect = std::numeric_limits<double>::infinity();
  Merit::Eval e;
  for (int outer = 0; outer < opt.max_outer_iterations; ++outer) {
    sol.merit_history.emplace_back();
    const auto inner = minimize_merit(merit, z, lam, mu, lo, hi, opt, e, sol.merit_history.back());
    sol.inner_iterations += inner.iterations;
    sol.outer_iterations = outer + 1;
    const double cinf = e.c.size() ? e.c.cwiseAbs().maxCoeff() : 0.0;
    log_debug("ocp outer " + std::to_string(outer) + ": defect " + std::to_string(cinf) + ", mu " +
              std::to_string(mu) + ", inner " + std::to_string(inner.iterations));
    if (cinf < opt.defect_tolerance && inner.converged) {
      sol.status = OcpStatus::converged;
      break;
    }
    lam += 2.0 * mu * e.c;
    if (cinf > 0.25 * prev_defect) {
      if (mu >= opt.max_penalty) {
        sol.status = cinf < opt.defect_tolerance ? OcpStatus::converged : OcpStatus::stalled;
        break;
      }
      mu = std::min(mu * opt.penalty_growth, opt.max_penalty);
    }
    prev_defect = cinf;
  }

  sol.times = problem.times;
  for (int k = 0; k < N; ++k) {
    const VectorXd x = t.state(z, k);
    GeneralizedState s{x.head(d), x.tail(d)};
    sol.states.push_back(s);
    sol.controls.push_back(t.control(z, k));
    sol.tau.push_back(torque_of<double>(problem.model, sol.controls.back(), s.q, s.qdot));
    sol.lambda.push_back(problem.contact == ContactInput::Mode::automatic ? contact_forces(problem.model, s).lambda_total
                                                                           : Vector3d::Zero());
  }
  sol.breakdown = t.objective(z);
  sol.objective = sol.breakdown.total();
  const VectorXd c = t.defects(z);
  sol.max_defect = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
  return sol;
}

ReferenceKinetics extract_reference_kinetics(const OcpProblem& problem, const OcpSolution& solution) {
  ReferenceKinetics out;
  out.times = solution.times;
  const auto& model = problem.model;
  for (std::size_t k = 0; k < solution.states.size(); ++k) {
    const auto& s = solution.states[k];
    const VectorXd tau = control_torque(model, solution.controls[k], s);
    KineticState ks;
    if (problem.contact == ContactInput::Mode::automatic) {
      ks = contact_forces(model, s);
    } else {
      ks.lambda_spheres.assign(model.sphere_count(), SphereForce{});
    }
    ks.tau = rotational_part(tau);
    out.kinetics.push_back(std::move(ks));
    out.tau_full.push_back(tau);
  }
  return out;
}

}  // namespace msk
