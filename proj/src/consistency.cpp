#include "msk/consistency.hpp"

#include <cmath>

#include "json.hpp"
#include "msk/dynamics.hpp"
#include "msk/kinematics.hpp"
#include "msk/log.hpp"

namespace msk {

void LossWeights::validate() const {
  for (double w : {lambda, tau, q, J})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("loss weights must be finite and nonnegative");
}

KineticLoss kinetic_loss(const std::vector<KineticState>& pred, const std::vector<KineticState>& ref,
                         const LossWeights& weights) {
  weights.validate();
  if (pred.size() != ref.size())
    throw DimensionError("kinetic_loss: " + std::to_string(pred.size()) + " predicted frames vs " +
                         std::to_string(ref.size()) + " reference frames");
  KineticLoss out;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].tau.size() != ref[t].tau.size())
      throw DimensionError("kinetic_loss: torque size mismatch at frame " + std::to_string(t));
    out.lambda += weights.lambda * (pred[t].lambda_total - ref[t].lambda_total).squaredNorm();
    out.tau += weights.tau * (pred[t].tau - ref[t].tau).squaredNorm();
  }
  return out;
}

ConsistencyLoss consistency_loss(const std::vector<VectorXd>& fd_q, const std::vector<VectorXd>& fk_joints,
                                 const std::vector<VectorXd>& ref_q, const std::vector<VectorXd>& ref_joints,
                                 const LossWeights& weights) {
  weights.validate();
  if (fd_q.size() != ref_q.size() || fk_joints.size() != ref_joints.size() || fd_q.size() != fk_joints.size())
    throw DimensionError("consistency_loss: series lengths differ");
  ConsistencyLoss out;
  for (std::size_t t = 0; t < fd_q.size(); ++t) {
    if (fd_q[t].size() != ref_q[t].size() || fk_joints[t].size() != ref_joints[t].size())
      throw DimensionError("consistency_loss: frame size mismatch at frame " + std::to_string(t));
    out.q += weights.q * (fd_q[t] - ref_q[t]).squaredNorm();
    out.J += weights.J * (fk_joints[t] - ref_joints[t]).squaredNorm();
  }
  return out;
}

namespace {

VectorXd joints_of(const SkeletonModel& model, const VectorXd& q) {
  return joint_centres(model, {q, VectorXd::Zero(model.dof())});
}

// d joint_centres / d q, stacked like joint_centres().
MatrixXd joints_jacobian(const SkeletonModel& model, const VectorXd& q) {
  const GeneralizedState s{q, VectorXd::Zero(model.dof())};
  MatrixXd J(3 * model.segment_count(), model.dof());
  for (int i = 0; i < model.segment_count(); ++i) J.middleRows(3 * i, 3) = point_jacobian(model, s, i, Vector3d::Zero());
  return J;
}

}  // namespace

ConsistencyLoss consistency_loss(const SkeletonModel& model, const std::vector<VectorXd>& fd_q,
                                 const std::vector<VectorXd>& ref_q, const LossWeights& weights) {
  if (fd_q.size() != ref_q.size()) throw DimensionError("consistency_loss: series lengths differ");
  std::vector<VectorXd> a, b;
  for (std::size_t t = 0; t < fd_q.size(); ++t) {
    a.push_back(joints_of(model, fd_q[t]));
    b.push_back(joints_of(model, ref_q[t]));
  }
  return consistency_loss(fd_q, a, ref_q, b, weights);
}

// --- roundtrip -------------------------------------------------------------

double RoundtripReport::max_q_residual() const {
  double m = 0.0;
  for (double r : q_residual) m = std::max(m, r);
  return m;
}

namespace {

double uniform_step(const std::vector<double>& times, const char* what) {
  if (times.size() < 2) throw ValidationError(std::string(what) + " needs at least 2 frames");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw ValidationError(std::string(what) + " times must be increasing");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-9 * std::max(1.0, std::abs(times[k])))
      throw ValidationError(std::string(what) + " must be uniformly sampled");
  return dt;
}

ContactInput contact_input(ContactInput::Mode mode) {
  if (mode == ContactInput::Mode::prescribed) throw ValidationError("contact must be 'none' or 'automatic'");
  return mode == ContactInput::Mode::automatic ? ContactInput::automatic() : ContactInput::none();
}

KineticState kinetics_at(const SkeletonModel& model, const GeneralizedState& s, const VectorXd& qdd,
                         ContactInput::Mode mode, VectorXd* tau_full) {
  KineticState k;
  if (mode == ContactInput::Mode::automatic)
    k = contact_forces(model, s);
  else
    k.lambda_spheres.assign(model.sphere_count(), SphereForce{});
  const VectorXd tau = inverse_dynamics(model, s, qdd, contact_input(mode));
  k.tau = rotational_part(tau);
  if (tau_full) *tau_full = tau;
  return k;
}

}  // namespace

RoundtripReport roundtrip_check(const SkeletonModel& model, const Trajectory& traj, const RoundtripOptions& options) {
  options.weights.validate();
  const double dt = uniform_step(traj.times, "roundtrip trajectory");
  const std::size_t N = traj.times.size();
  if (traj.states.size() != N) throw DimensionError("roundtrip: states and times lengths differ");
  if (traj.qddot.size() != N) throw DimensionError("roundtrip: accelerations are required for every frame");
  for (std::size_t t = 0; t < N; ++t) {
    check_dimensions(model, traj.states[t]);
    if (traj.qddot[t].size() != model.dof()) throw DimensionError("roundtrip: acceleration has wrong dimension");
  }
  contact_input(options.contact);

  RoundtripReport rep;
  ControlTrajectory ct;
  ct.contact = options.contact;
  for (std::size_t t = 0; t < N; ++t) {
    VectorXd tau;
    rep.kinetics.push_back(kinetics_at(model, traj.states[t], traj.qddot[t], options.contact, &tau));
    rep.root_residual.push_back(root_part(tau).norm());
    rep.tau_full.push_back(tau);
    ct.times.push_back(traj.times[t] - traj.times[0]);
    ct.tau.push_back(std::move(tau));
  }
  const auto ro = rollout(model, traj.states[0], ct, traj.times.back() - traj.times[0], dt, options.integrator);
  rep.ok = ro.ok;
  rep.error = ro.error;
  if (!ro.ok) rep.divergence_time = ro.failure_time.value_or(0.0) + traj.times[0];
  rep.reconstructed = ro.trajectory;
  for (auto& t : rep.reconstructed.times) t += traj.times[0];

  const std::size_t done = std::min(N, ro.trajectory.states.size());
  std::vector<VectorXd> fd_q, ref_q, fd_J, ref_J;
  std::vector<KineticState> rec_kin, ref_kin;
  for (std::size_t t = 0; t < done; ++t) {
    const auto& a = ro.trajectory.states[t];
    const auto& b = traj.states[t];
    fd_q.push_back(a.q);
    ref_q.push_back(b.q);
    fd_J.push_back(joints_of(model, a.q));
    ref_J.push_back(joints_of(model, b.q));
    rep.times.push_back(traj.times[t]);
    rep.q_residual.push_back((a.q - b.q).norm());
    rep.joint_residual.push_back((fd_J.back() - ref_J.back()).norm());
    rec_kin.push_back(kinetics_at(model, a, ro.trajectory.qddot[t], options.contact, nullptr));
    ref_kin.push_back(rep.kinetics[t]);
    rep.tau_residual.push_back((rec_kin.back().tau - ref_kin.back().tau).norm());
    rep.lambda_residual.push_back((rec_kin.back().lambda_total - ref_kin.back().lambda_total).norm());
  }
  rep.consistency = consistency_loss(fd_q, fd_J, ref_q, ref_J, options.weights);
  rep.kinetic = kinetic_loss(rec_kin, ref_kin, options.weights);
  if (!rep.ok) log_warn("roundtrip rollout diverged: " + rep.error);
  return rep;
}

// --- surrogate ---------------------------------------------------------------

SurrogateId::SurrogateId(const SkeletonModel& model, int degree)
    : degree_(degree), rot_dof_(model.rot_dof()), dof_(model.dof()) {
  if (degree < 1 || degree > 2) throw ValidationError("surrogate degree must be 1 or 2");
  const int n = model.dof();
  const int first = model.root_locked() ? 6 : 0;
  for (int i = first; i < n; ++i) inputs_.push_back(i);
  for (int i = first; i < n; ++i) inputs_.push_back(n + i);
  offset = VectorXd::Zero(input_size());
  scale = VectorXd::Ones(input_size());
  weights = MatrixXd::Zero(output_size(), feature_size());
}

int SurrogateId::feature_size() const {
  const int m = input_size();
  return degree_ == 1 ? 1 + m : 1 + m + m * (m + 1) / 2;
}

namespace {

VectorXd raw_inputs(const std::vector<int>& idx, int dof, const GeneralizedState& s) {
  VectorXd x(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) x(i) = idx[i] < dof ? s.q(idx[i]) : s.qdot(idx[i] - dof);
  return x;
}

}  // namespace

VectorXd SurrogateId::features(const GeneralizedState& state) const {
  if (state.q.size() != dof_ || state.qdot.size() != dof_) throw DimensionError("surrogate: state has wrong dimension");
  const VectorXd x = (raw_inputs(inputs_, dof_, state) - offset).cwiseQuotient(scale);
  const int m = input_size();
  VectorXd phi(feature_size());
  phi(0) = 1.0;
  phi.segment(1, m) = x;
  if (degree_ == 2) {
    int c = 1 + m;
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) phi(c++) = x(i) * x(j);
  }
  return phi;
}

MatrixXd SurrogateId::feature_jacobian(const GeneralizedState& state) const {
  const VectorXd x = (raw_inputs(inputs_, dof_, state) - offset).cwiseQuotient(scale);
  const int m = input_size();
  MatrixXd D = MatrixXd::Zero(feature_size(), 2 * dof_);
  for (int i = 0; i < m; ++i) D(1 + i, inputs_[i]) = 1.0 / scale(i);
  if (degree_ == 2) {
    int c = 1 + m;
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        D(c, inputs_[i]) += x(j) / scale(i);
        D(c, inputs_[j]) += x(i) / scale(j);
        ++c;
      }
  }
  return D;
}

VectorXd SurrogateId::predict_raw(const GeneralizedState& state) const { return weights * features(state); }

KineticState SurrogateId::predict(const GeneralizedState& state) const {
  const VectorXd y = predict_raw(state);
  KineticState k;
  k.tau = y.head(rot_dof_);
  k.lambda_total = y.tail<3>();
  return k;
}

std::string SurrogateId::serialize() const {
  nlohmann::ordered_json j;
  j["format"] = "msk-surrogate";
  j["schema_version"] = 1;
  j["degree"] = degree_;
  j["dof"] = dof_;
  j["rot_dof"] = rot_dof_;
  j["inputs"] = inputs_;
  j["offset"] = std::vector<double>(offset.data(), offset.data() + offset.size());
  j["scale"] = std::vector<double>(scale.data(), scale.data() + scale.size());
  j["ridge"] = ridge;
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    std::vector<double> row(weights.cols());
    for (Eigen::Index c = 0; c < weights.cols(); ++c) row[c] = weights(r, c);
    rows.push_back(row);
  }
  j["weights"] = rows;
  return j.dump(1) + "\n";
}

SurrogateId SurrogateId::parse(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("surrogate file: ") + e.what());
  }
  SurrogateId s;
  try {
    if (j.at("format").get<std::string>() != "msk-surrogate") throw ParseError("not a surrogate weights file");
    if (j.at("schema_version").get<int>() != 1) throw ParseError("unsupported surrogate schema version");
    s.degree_ = j.at("degree").get<int>();
    s.dof_ = j.at("dof").get<int>();
    s.rot_dof_ = j.at("rot_dof").get<int>();
    s.inputs_ = j.at("inputs").get<std::vector<int>>();
    const auto off = j.at("offset").get<std::vector<double>>();
    const auto sc = j.at("scale").get<std::vector<double>>();
    s.offset = Eigen::Map<const VectorXd>(off.data(), off.size());
    s.scale = Eigen::Map<const VectorXd>(sc.data(), sc.size());
    s.ridge = j.at("ridge").get<double>();
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    if (s.degree_ < 1 || s.degree_ > 2) throw ParseError("surrogate degree must be 1 or 2");
    if (static_cast<int>(off.size()) != s.input_size() || static_cast<int>(sc.size()) != s.input_size())
      throw ParseError("surrogate normalization has wrong size");
    if (static_cast<int>(rows.size()) != s.output_size()) throw ParseError("surrogate weights have wrong row count");
    s.weights.resize(s.output_size(), s.feature_size());
    for (int r = 0; r < s.output_size(); ++r) {
      if (static_cast<int>(rows[r].size()) != s.feature_size())
        throw ParseError("surrogate weights have wrong column count");
      for (int c = 0; c < s.feature_size(); ++c) s.weights(r, c) = rows[r][c];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("surrogate file: ") + e.what());
  }
  if (!s.weights.allFinite()) throw ParseError("surrogate weights must be finite");
  return s;
}

// --- training ----------------------------------------------------------------

namespace {

void validate_dataset(const SkeletonModel& model, const std::vector<TrainingSequence>& data) {
  if (data.empty()) throw ValidationError("training dataset is empty");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data[i];
    const std::string where = "training sequence " + std::to_string(i);
    uniform_step(d.trajectory.times, where.c_str());
    if (d.trajectory.states.size() != d.trajectory.times.size() || d.reference.size() != d.trajectory.times.size())
      throw ValidationError(where + ": states, times and reference kinetics must align");
    for (const auto& s : d.trajectory.states) check_dimensions(model, s);
    for (const auto& k : d.reference)
      if (k.tau.size() != model.rot_dof()) throw DimensionError(where + ": reference torque has wrong dimension");
  }
}

VectorXd generalized_torque(const SkeletonModel& model, const VectorXd& y) {
  VectorXd tau = VectorXd::Zero(model.dof());
  tau.tail(model.rot_dof()) = y.head(model.rot_dof());
  return tau;
}

}  // namespace

SurrogateObjective surrogate_objective(const SkeletonModel& model, const SurrogateId& sur,
                                       const std::vector<TrainingSequence>& data,
                                       const SurrogateTrainingOptions& opt, MatrixXd* gradient) {
  opt.weights.validate();
  if (opt.horizon < 1) throw ValidationError("training horizon must be at least 1 step");
  const auto& w = opt.weights;
  const int O = sur.output_size(), F = sur.feature_size(), rot = sur.rot_dof(), n = model.dof();
  const int P = O * F;  // parameter p = o * F + f
  SurrogateObjective obj;
  MatrixXd G = MatrixXd::Zero(O, F);

  for (const auto& seq : data) {
    const auto& tr = seq.trajectory;
    const std::size_t N = tr.times.size();
    for (std::size_t t = 0; t < N; ++t) {
      const VectorXd phi = sur.features(tr.states[t]);
      const VectorXd y = sur.weights * phi;
      const VectorXd et = y.head(rot) - seq.reference[t].tau;
      const Vector3d el = y.tail<3>() - seq.reference[t].lambda_total;
      obj.kinetic.tau += w.tau * et.squaredNorm();
      obj.kinetic.lambda += w.lambda * el.squaredNorm();
      if (gradient) {
        G.topRows(rot) += 2.0 * w.tau * et * phi.transpose();
        G.bottomRows(3) += 2.0 * w.lambda * el * phi.transpose();
      }
    }
    if (w.q == 0.0 && w.J == 0.0) continue;

    const double dt = tr.times[1] - tr.times[0];
    for (std::size_t t0 = 0; t0 + 1 < N; t0 += opt.horizon) {
      const std::size_t steps = std::min<std::size_t>(opt.horizon, N - 1 - t0);
      GeneralizedState x = tr.states[t0];
      MatrixXd S;  // d x / d params, empty while zero
      for (std::size_t k = 0; k < steps; ++k) {
        const VectorXd phi = sur.features(x);
        const VectorXd y = sur.weights * phi;
        const auto ct = ControlTrajectory::constant(generalized_torque(model, y), opt.contact);
        std::vector<SensitivitySeed> seeds;
        if (gradient) {
          if (S.size() > 0)
            for (int i = 0; i < 2 * n; ++i) seeds.push_back({VectorXd::Unit(2 * n, i), {}});
          for (int r = 0; r < rot; ++r) seeds.push_back({{}, {VectorXd::Unit(n, n - rot + r)}});
        }
        const auto sens = rollout_with_sensitivities(model, x, ct, dt, dt, seeds, opt.integrator);
        if (!sens.nominal.ok || sens.nominal.trajectory.states.size() < 2)
          throw NumericalError("surrogate rollout failed during training: " + sens.nominal.error);
        const GeneralizedState next = sens.nominal.trajectory.states[1];
        if (gradient) {
          const int xs = S.size() > 0 ? 2 * n : 0;
          MatrixXd Phi_tau(2 * n, rot);
          for (int r = 0; r < rot; ++r) Phi_tau.col(r) = sens.directional[xs + r][1];
          // dtau/dparams (rot x P) plus the state path through the features.
          MatrixXd D = MatrixXd::Zero(rot, P);
          for (int o = 0; o < rot; ++o) D.row(o).segment(o * F, F) = phi.transpose();
          MatrixXd Snext = Phi_tau * D;
          if (xs > 0) {
            MatrixXd Phi_x(2 * n, 2 * n);
            for (int i = 0; i < 2 * n; ++i) Phi_x.col(i) = sens.directional[i][1];
            const MatrixXd dtau_dx = sur.weights.topRows(rot) * sur.feature_jacobian(x);
            Snext += Phi_x * S + Phi_tau * (dtau_dx * S);
          }
          S = std::move(Snext);
        }
        x = next;
        const GeneralizedState& ref = tr.states[t0 + k + 1];
        const VectorXd eq = x.q - ref.q;
        obj.consistency.q += w.q * eq.squaredNorm();
        VectorXd gq = 2.0 * w.q * eq;
        if (w.J > 0.0) {
          const VectorXd eJ = joints_of(model, x.q) - joints_of(model, ref.q);
          obj.consistency.J += w.J * eJ.squaredNorm();
          if (gradient) gq += 2.0 * w.J * joints_jacobian(model, x.q).transpose() * eJ;
        }
        if (gradient) {
          const VectorXd gp = S.topRows(n).transpose() * gq;
          G += Eigen::Map<const MatrixXd>(gp.data(), F, O).transpose();
        }
      }
    }
  }
  obj.ridge = opt.ridge * sur.weights.squaredNorm();
  if (gradient) *gradient = G + 2.0 * opt.ridge * sur.weights;
  return obj;
}

SurrogateFit fit_surrogate_id(const SkeletonModel& model, const std::vector<TrainingSequence>& data,
                              const SurrogateTrainingOptions& opt) {
  validate_dataset(model, data);
  opt.weights.validate();
  if (!(opt.ridge >= 0.0)) throw ValidationError("ridge strength must be nonnegative");
  if (!(opt.learning_rate >= 0.0)) throw ValidationError("learning rate must be nonnegative");
  if (opt.steps < 0) throw ValidationError("step count must be nonnegative");

  SurrogateFit fit;
  SurrogateId& sur = fit.surrogate;
  sur = SurrogateId(model, opt.degree);
  sur.ridge = opt.ridge;

  // Input standardization from the training frames.
  std::vector<VectorXd> xs;
  for (const auto& d : data)
    for (const auto& s : d.trajectory.states) xs.push_back(raw_inputs(sur.inputs(), model.dof(), s));
  VectorXd mean = VectorXd::Zero(sur.input_size()), var = VectorXd::Zero(sur.input_size());
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  for (const auto& x : xs) var += (x - mean).cwiseAbs2();
  var /= static_cast<double>(xs.size());
  sur.offset = mean;
  sur.scale = var.cwiseSqrt().unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });

  if (opt.initial_weights) {
    if (opt.initial_weights->rows() != sur.output_size() || opt.initial_weights->cols() != sur.feature_size())
      throw DimensionError("initial surrogate weights have wrong shape");
    sur.weights = *opt.initial_weights;
  } else if (opt.warm_start) {
    // Ridge least squares on the kinetic loss alone, one output at a time.
    const int F = sur.feature_size(), rot = sur.rot_dof();
    MatrixXd A = MatrixXd::Zero(F, F), B = MatrixXd::Zero(F, sur.output_size());
    for (const auto& d : data)
      for (std::size_t t = 0; t < d.trajectory.states.size(); ++t) {
        const VectorXd phi = sur.features(d.trajectory.states[t]);
        VectorXd y(sur.output_size());
        y << d.reference[t].tau, d.reference[t].lambda_total;
        A += phi * phi.transpose();
        B += phi * y.transpose();
      }
    for (int o = 0; o < sur.output_size(); ++o) {
      const double wo = o < rot ? opt.weights.tau : opt.weights.lambda;
      if (wo == 0.0) continue;
      MatrixXd H = wo * A;
      H.diagonal().array() += opt.ridge;
      sur.weights.row(o) = H.ldlt().solve(wo * B.col(o)).transpose();
    }
  }

  auto record = [&](int step, const SurrogateObjective& o) {
    auto& r = fit.report;
    r.step.push_back(step);
    r.kinetic_lambda.push_back(o.kinetic.lambda);
    r.kinetic_tau.push_back(o.kinetic.tau);
    r.consistency_q.push_back(o.consistency.q);
    r.consistency_J.push_back(o.consistency.J);
    r.ridge.push_back(o.ridge);
    r.total.push_back(o.total());
  };

  MatrixXd m1 = MatrixXd::Zero(sur.weights.rows(), sur.weights.cols()), m2 = m1;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int step = 0;; ++step) {
    MatrixXd grad;
    SurrogateObjective o;
    try {
      o = surrogate_objective(model, sur, data, opt, step < opt.steps ? &grad : nullptr);
    } catch (const NumericalError& e) {
      throw NumericalError("surrogate training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(o.total()))
      throw NumericalError("surrogate training diverged: non-finite loss at step " + std::to_string(step));
    record(step, o);
    if (step >= opt.steps) break;
    if (opt.optimizer == Optimizer::gradient_descent) {
      sur.weights -= opt.learning_rate * grad;
    } else {
      m1 = b1 * m1 + (1.0 - b1) * grad;
      m2 = b2 * m2 + (1.0 - b2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(b1, step + 1), c2 = 1.0 - std::pow(b2, step + 1);
      sur.weights.array() -= opt.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
    }
  }
  return fit;
}

RolloutResult surrogate_rollout(const SkeletonModel& model, const SurrogateId& sur, const GeneralizedState& x0,
                                double horizon, double dt, ContactInput::Mode contact,
                                const IntegratorOptions& options) {
  check_dimensions(model, x0);
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  if (!(horizon >= 0.0)) throw ValidationError("horizon must be non-negative");
  const auto cin = contact_input(contact);
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  RolloutResult out;
  VectorXd x = to_ode_state(x0);
  auto knot = [&](double t, const VectorXd& state, const VectorXd& tau) {
    out.trajectory.times.push_back(t);
    out.trajectory.states.push_back(from_ode_state(state));
    out.trajectory.qddot.push_back(ode_rhs(model, state, tau, cin).tail(model.dof()));
  };
  try {
    VectorXd tau = generalized_torque(model, sur.predict_raw(from_ode_state(x)));
    knot(0.0, x, tau);
    for (long k = 1; k <= steps; ++k) {
      const double t = (k - 1) * dt, h = std::min(horizon, k * dt) - t;
      x = step(model, x, ControlTrajectory::constant(tau, contact), t, h, options);
      if (!x.allFinite()) throw NumericalError("non-finite state at t=" + std::to_string(t + h));
      tau = generalized_torque(model, sur.predict_raw(from_ode_state(x)));
      knot(t + h, x, tau);
    }
  } catch (const NumericalError& e) {
    out.ok = false;
    out.error = e.what();
    out.failure_time = out.trajectory.times.empty() ? 0.0 : out.trajectory.times.back();
  }
  return out;
}

}  // namespace msk
