#include "msk/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "msk/detail/dynamics_impl.hpp"
#include "msk/detail/rk.hpp"

namespace msk {

Method parse_method(const std::string& name) {
  if (name == "rk4") return Method::rk4;
  if (name == "rk45" || name == "dopri5") return Method::rk45;
  if (name == "euler" || name == "semi_implicit_euler") return Method::semi_implicit_euler;
  throw ValidationError("unknown integration method '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::rk4: return "rk4";
    case Method::rk45: return "rk45";
    case Method::semi_implicit_euler: return "euler";
  }
  return "rk4";
}

VectorXd to_ode_state(const GeneralizedState& state) {
  VectorXd x(state.q.size() + state.qdot.size());
  x << state.q, state.qdot;
  return x;
}

GeneralizedState from_ode_state(const VectorXd& x) {
  const Eigen::Index n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

ControlTrajectory ControlTrajectory::constant(VectorXd tau, ContactInput::Mode contact) {
  ControlTrajectory c;
  c.times = {0.0};
  c.tau = {std::move(tau)};
  c.contact = contact;
  return c;
}

void ControlTrajectory::validate(const SkeletonModel& model) const {
  if (times.empty()) throw ValidationError("control trajectory has no knots");
  if (tau.size() != times.size()) throw DimensionError("control trajectory: times and tau lengths differ");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw ValidationError("control times must be strictly increasing");
  for (const auto& t : tau)
    if (t.size() != model.dof())
      throw DimensionError("control knot has " + std::to_string(t.size()) + " entries, model expects " +
                           std::to_string(model.dof()));
  if (contact == ContactInput::Mode::prescribed) {
    if (sphere_forces.size() != times.size())
      throw DimensionError("prescribed contact needs one force vector per control knot");
    for (const auto& fk : sphere_forces)
      if (fk.size() != 3 * model.sphere_count())
        throw DimensionError("prescribed contact forces need " + std::to_string(3 * model.sphere_count()) +
                             " entries");
  }
}

namespace {

// Control knots lifted to scalar type S.
template <class S>
struct ControlView {
  const ControlTrajectory* src;
  std::vector<VecX<S>> tau;

  // Largest knot index with times[i] <= t (clamped to 0).
  std::size_t knot(double t) const {
    const auto& ts = src->times;
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    auto it = std::upper_bound(ts.begin(), ts.end(), t + tol);
    if (it == ts.begin()) return 0;
    return static_cast<std::size_t>(it - ts.begin()) - 1;
  }

  // Interpolation weight pair (k, w) so that value = (1-w) v_k + w v_{k+1}.
  std::pair<std::size_t, double> bracket(double t_stage, double t_start) const {
    const auto& ts = src->times;
    if (src->interpolation == Interpolation::zero_order_hold || ts.size() == 1) return {knot(t_start), 0.0};
    if (t_stage <= ts.front()) return {0, 0.0};
    if (t_stage >= ts.back()) return {ts.size() - 1, 0.0};
    const std::size_t k = knot(t_stage);
    if (k + 1 >= ts.size()) return {k, 0.0};
    return {k, (t_stage - ts[k]) / (ts[k + 1] - ts[k])};
  }

  VecX<S> tau_at(double t_stage, double t_start) const {
    const auto [k, w] = bracket(t_stage, t_start);
    if (w == 0.0) return tau[k];
    return VecX<S>((1.0 - w) * tau[k] + w * tau[k + 1]);
  }

  VectorXd forces_at(double t_stage, double t_start) const {
    const auto [k, w] = bracket(t_stage, t_start);
    const auto& f = src->sphere_forces;
    if (w == 0.0) return f[k];
    return (1.0 - w) * f[k] + w * f[k + 1];
  }
};

template <class S>
ControlView<S> lift(const ControlTrajectory& c) {
  ControlView<S> v{&c, {}};
  for (const auto& t : c.tau) v.tau.push_back(t.template cast<S>());
  return v;
}

template <class S>
VecX<S> rhs(const SkeletonModel& model, const VecX<S>& x, const VecX<S>& tau, ContactInput::Mode mode,
            const VectorXd& prescribed) {
  const int n = model.dof();
  const VecX<S> q = x.head(n);
  const VecX<S> qd = x.tail(n);
  const auto f = detail::compute_frames<S>(model, q);
  VecX<S> r = tau - detail::rnea<S>(model, f, qd, VecX<S>::Zero(n), true);
  if (mode == ContactInput::Mode::automatic)
    r += detail::contact<S>(model, f, qd).generalized;
  else if (mode == ContactInput::Mode::prescribed)
    r += detail::prescribed_contact<S>(model, f, prescribed);
  const MatX<S> M = detail::mass_matrix<S>(model, f);
  VecX<S> dx(2 * n);
  dx.head(n) = qd;
  dx.tail(n) = detail::solve_accelerations<S>(model, M, r);
  return dx;
}

template <class S>
VecX<S> rhs_at(const SkeletonModel& model, const ControlView<S>& cv, const VecX<S>& x, double t_stage,
               double t_start) {
  const auto mode = cv.src->contact;
  const VectorXd forces = mode == ContactInput::Mode::prescribed ? cv.forces_at(t_stage, t_start) : VectorXd();
  return rhs<S>(model, x, cv.tau_at(t_stage, t_start), mode, forces);
}

template <class S>
Mat3<S> inverse3(const Mat3<S>& A) {
  Mat3<S> C;
  C(0, 0) = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  C(0, 1) = A(0, 2) * A(2, 1) - A(0, 1) * A(2, 2);
  C(0, 2) = A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1);
  C(1, 0) = A(1, 2) * A(2, 0) - A(1, 0) * A(2, 2);
  C(1, 1) = A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0);
  C(1, 2) = A(0, 2) * A(1, 0) - A(0, 0) * A(1, 2);
  C(2, 0) = A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0);
  C(2, 1) = A(0, 1) * A(2, 0) - A(0, 0) * A(2, 1);
  C(2, 2) = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  const S det = A(0, 0) * C(0, 0) + A(0, 1) * C(1, 0) + A(0, 2) * C(2, 0);
  return C / det;
}

// Wraps the root rotation back to |R| <= pi keeping the angular velocity.
template <class S>
void canonicalize_root(const SkeletonModel& model, VecX<S>& x) {
  const int n = model.dof();
  const Vec3<S> phi = x.template segment<3>(3);
  const double theta = std::sqrt(value_of(phi.dot(phi)));
  if (theta <= std::numbers::pi) return;
  const Vec3<S> phi_c = rot::canonical<S>(phi);
  const Vec3<S> omega = rot::left_jacobian<S>(phi) * Vec3<S>(x.template segment<3>(n + 3));
  x.template segment<3>(3) = phi_c;
  x.template segment<3>(n + 3) = inverse3<S>(rot::left_jacobian<S>(phi_c)) * omega;
}

template <class S>
void check_finite(const VecX<S>& x, double t) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(value_of(x(i))))
      throw NumericalError("non-finite state at t=" + std::to_string(t));
}

template <class S>
VecX<S> fixed_step(const SkeletonModel& model, const ControlView<S>& cv, const VecX<S>& x, double t, double dt,
                   Method method) {
  // ZOH controls are evaluated at the step start t for every stage.
  auto f = [&](double ts, const VecX<S>& y) { return rhs_at<S>(model, cv, y, ts, t); };
  if (method == Method::semi_implicit_euler) return detail::symplectic_euler_step(f, x, t, dt);
  return detail::rk4_step(f, x, t, dt);
}

template <class S>
VecX<S> advance(const SkeletonModel& model, const ControlView<S>& cv, const VecX<S>& x, double t, double dt,
                const IntegratorOptions& opt) {
  VecX<S> out;
  if constexpr (std::is_same_v<S, double>) {
    if (opt.method == Method::rk45) {
      auto f = [&](double ts, const VectorXd& y) { return rhs_at<double>(model, cv, y, ts, t); };
      out = detail::dopri5_interval(f, x, t, dt, {opt.rtol, opt.atol, opt.min_step});
    }
  }
  if (out.size() == 0) out = fixed_step<S>(model, cv, x, t, dt, opt.method);
  check_finite<S>(out, t + dt);
  if (opt.canonicalize) canonicalize_root<S>(model, out);
  return out;
}

template <class S>
VecX<S> knot_acceleration(const SkeletonModel& model, const ControlView<S>& cv, const VecX<S>& x, double t) {
  return rhs_at<S>(model, cv, x, t, t).tail(model.dof());
}

struct RawRollout {
  std::vector<double> times;
  bool ok = true;
  std::string error;
  std::optional<double> failure_time;
};

std::vector<double> knot_times(double horizon, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be non-negative");
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  std::vector<double> ts;
  ts.reserve(steps + 1);
  for (long k = 0; k <= steps; ++k) ts.push_back(std::min(horizon, k * dt));
  return ts;
}

// Integrates recording states and knot accelerations; stops on failure.
template <class S>
RawRollout integrate(const SkeletonModel& model, const ControlView<S>& cv, const VecX<S>& x0, double horizon,
                     double dt, const IntegratorOptions& opt, std::vector<VecX<S>>& xs, std::vector<VecX<S>>& accs) {
  RawRollout r;
  const auto ts = knot_times(horizon, dt);
  VecX<S> x = x0;
  if (opt.canonicalize) canonicalize_root<S>(model, x);
  try {
    check_finite<S>(x, 0.0);
    xs.push_back(x);
    accs.push_back(knot_acceleration<S>(model, cv, x, ts[0]));
    r.times.push_back(ts[0]);
    for (std::size_t k = 1; k < ts.size(); ++k) {
      x = advance<S>(model, cv, x, ts[k - 1], ts[k] - ts[k - 1], opt);
      VecX<S> a = knot_acceleration<S>(model, cv, x, ts[k]);
      xs.push_back(x);
      accs.push_back(std::move(a));
      r.times.push_back(ts[k]);
    }
  } catch (const NumericalError& e) {
    r.ok = false;
    r.error = e.what();
    r.failure_time = r.times.empty() ? 0.0 : r.times.back();
    if (accs.size() < xs.size()) xs.pop_back();
  }
  return r;
}

RolloutResult package(const SkeletonModel& model, RawRollout&& raw, const std::vector<VectorXd>& xs,
                      const std::vector<VectorXd>& accs) {
  RolloutResult out;
  out.ok = raw.ok;
  out.error = std::move(raw.error);
  out.failure_time = raw.failure_time;
  out.trajectory.times = std::move(raw.times);
  const int n = model.dof();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    out.trajectory.states.push_back({xs[k].head(n), xs[k].tail(n)});
    out.trajectory.qddot.push_back(accs[k]);
  }
  return out;
}

void check_x0(const SkeletonModel& model, const GeneralizedState& x0) { check_dimensions(model, x0); }

}  // namespace

VectorXd ode_rhs(const SkeletonModel& model, const VectorXd& x, const VectorXd& tau, const ContactInput& contact) {
  if (x.size() != 2 * model.dof())
    throw DimensionError("ODE state has " + std::to_string(x.size()) + " entries, model expects " +
                         std::to_string(2 * model.dof()));
  if (tau.size() != model.dof()) throw DimensionError("tau has wrong dimension");
  if (contact.mode() == ContactInput::Mode::prescribed && contact.forces().size() != 3 * model.sphere_count())
    throw DimensionError("prescribed contact forces have wrong dimension");
  return rhs<double>(model, x, tau, contact.mode(), contact.forces());
}

VectorXd step(const SkeletonModel& model, const VectorXd& x, const ControlTrajectory& controls, double t, double dt,
              const IntegratorOptions& options) {
  if (x.size() != 2 * model.dof()) throw DimensionError("ODE state has wrong dimension");
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  controls.validate(model);
  const auto cv = lift<double>(controls);
  return advance<double>(model, cv, x, t, dt, options);
}

RolloutResult rollout(const SkeletonModel& model, const GeneralizedState& x0, const ControlTrajectory& controls,
                      double horizon, double dt, const IntegratorOptions& options) {
  check_x0(model, x0);
  controls.validate(model);
  const auto cv = lift<double>(controls);
  std::vector<VectorXd> xs, accs;
  auto raw = integrate<double>(model, cv, to_ode_state(x0), horizon, dt, options, xs, accs);
  return package(model, std::move(raw), xs, accs);
}

SensitivityResult rollout_with_sensitivities(const SkeletonModel& model, const GeneralizedState& x0,
                                             const ControlTrajectory& controls, double horizon, double dt,
                                             const std::vector<SensitivitySeed>& seeds,
                                             const IntegratorOptions& options) {
  if (options.method == Method::rk45)
    throw ValidationError("sensitivities require a fixed-step method (rk4 or euler)");
  check_x0(model, x0);
  controls.validate(model);
  const int n = model.dof();
  SensitivityResult out;
  out.nominal = rollout(model, x0, controls, horizon, dt, options);
  const VectorXd x0v = to_ode_state(x0);
  for (const auto& seed : seeds) {
    if (seed.dx0.size() != 0 && seed.dx0.size() != 2 * n) throw DimensionError("seed dx0 has wrong dimension");
    if (!seed.dtau.empty() && seed.dtau.size() != controls.tau.size())
      throw DimensionError("seed dtau needs one entry per control knot");
    VecX<Dual> xd(2 * n);
    for (int i = 0; i < 2 * n; ++i) xd(i) = Dual{x0v(i), seed.dx0.size() ? seed.dx0(i) : 0.0};
    auto cv = lift<Dual>(controls);
    for (std::size_t k = 0; k < seed.dtau.size(); ++k) {
      if (seed.dtau[k].size() != n) throw DimensionError("seed dtau knot has wrong dimension");
      for (int i = 0; i < n; ++i) cv.tau[k](i).d = seed.dtau[k](i);
    }
    std::vector<VecX<Dual>> xs, accs;
    integrate<Dual>(model, cv, xd, horizon, dt, options, xs, accs);
    std::vector<VectorXd> dirs;
    for (const auto& x : xs) {
      VectorXd d(2 * n);
      for (int i = 0; i < 2 * n; ++i) d(i) = x(i).d;
      dirs.push_back(std::move(d));
    }
    out.directional.push_back(std::move(dirs));
  }
  return out;
}

}  // namespace msk
