// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "msk/consistency.hpp"
#include "msk/dynamics.hpp"
#include "msk/ik.hpp"
#include "msk/integrator.hpp"
#include "msk/io.hpp"
#include "msk/kinematics.hpp"
#include "msk/ocp.hpp"
#include "msk/rotation.hpp"
#include "ocp_fixtures.hpp"
#include "training_fixtures.hpp"

using namespace msk;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// --- 1. dynamics identity ----------------------------------------------------

void dynamics_identity(Outcome& o) {
  const auto& m = test::full_body();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int t = 0; t < 1000; ++t) {
    const auto s = test::random_state(m, rng);
    const VectorXd tau = test::random_vector(rng, m.dof(), 50.0);
    const auto lam = ContactInput::prescribed(test::random_vector(rng, 3 * m.sphere_count(), 200.0));
    const VectorXd qdd = forward_dynamics(m, s, tau, lam);
    worst = std::max(worst, test::rel_err(inverse_dynamics(m, s, qdd, lam), tau));
  }
  const double secs = seconds_since(t0);
  o.detail << "max |ID(FD) - tau|/|tau| = " << sci(worst) << " over 1000 samples, " << sci(secs) << " s";
  o.require(worst < 1e-8, "relative error < 1e-8");
  o.require(secs < 10.0, "runtime < 10 s");
}

// --- 2. mass matrix ------------------------------------------------------------

void mass_matrix_properties(Outcome& o) {
  const auto& m = test::full_body();
  std::mt19937_64 rng(102);
  double worst = 0.0;
  int chol = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto s = test::random_state(m, rng);
    const MatrixXd M = mass_matrix(m, s);
    worst = std::max(worst, (M - M.transpose()).norm() / M.norm());
    chol += Eigen::LLT<MatrixXd>(M).info() == Eigen::Success;
  }
  o.detail << "max asymmetry " << sci(worst) << ", Cholesky " << chol << "/1000";
  o.require(worst < 1e-9, "symmetry < 1e-9");
  o.require(chol == 1000, "Cholesky on every state");
}

// --- 3. Jacobians and sensitivities ------------------------------------------

void jacobian_checks(Outcome& o) {
  double marker_err = 0.0, contact_err = 0.0, rhs_err = 0.0, sens_err = 0.0;
  {
    const auto& m = test::full_body();
    // Same skeleton with markers at the sphere centres, so the contact
    // Jacobian is checked against differences of marker positions.
    ModelDescription d = m.description();
    d.markers.clear();
    for (int k = 0; k < m.sphere_count(); ++k)
      d.markers.push_back({"sphere" + std::to_string(k), m.contact_spheres()[k].segment,
                           m.contact_spheres()[k].local_position});
    const SkeletonModel spheres(d);
    auto stacked = [](const SkeletonModel& model, const VectorXd& q) {
      const auto p = marker_positions(model, {q, VectorXd::Zero(model.dof())});
      VectorXd v(3 * p.size());
      for (std::size_t k = 0; k < p.size(); ++k) v.segment<3>(3 * k) = p[k];
      return v;
    };
    std::mt19937_64 rng(103);
    const double h = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
      const VectorXd q = test::random_q(m, rng);
      const GeneralizedState s{q, VectorXd::Zero(m.dof())};
      const MatrixXd J = marker_jacobian(m, s);
      const MatrixXd Jc = contact_jacobian(m, s);
      MatrixXd fd(J.rows(), J.cols()), fdc(Jc.rows(), Jc.cols());
      for (int i = 0; i < m.dof(); ++i) {
        VectorXd qp = q, qm = q;
        qp(i) += h;
        qm(i) -= h;
        fd.col(i) = (stacked(m, qp) - stacked(m, qm)) / (2 * h);
        fdc.col(i) = (stacked(spheres, qp) - stacked(spheres, qm)) / (2 * h);
      }
      marker_err = std::max(marker_err, (J - fd).norm() / fd.norm());
      contact_err = std::max(contact_err, (Jc - fdc).norm() / fdc.norm());
    }
  }
  {
    // Collocation right-hand-side Jacobians on the two-link arm.
    const auto p = test::two_link_tracking(5, 0.05);
    const Transcription tr(p);
    std::mt19937_64 rng(104);
    std::vector<VectorXd> xs, us;
    for (int k = 0; k < p.knots(); ++k) {
      VectorXd x(2 * p.model.dof());
      x << p.q_ref[k], p.qdot_ref[k];
      xs.push_back(x);
      us.push_back(test::random_vector(rng, p.control_count(), 0.5));
    }
    const VectorXd z = tr.pack(xs, us);
    MatrixXd A, B;
    tr.rhs_jacobian(z, 2, A, B);
    const int nx = tr.state_size(), nu = tr.control_size();
    MatrixXd fd(nx, nx + nu);
    const double h = 1e-6;
    for (int i = 0; i < nx + nu; ++i) {
      VectorXd zp = z, zm = z;
      const int idx = i < nx ? 2 * nx + i : 5 * nx + 2 * nu + (i - nx);
      zp(idx) += h;
      zm(idx) -= h;
      fd.col(i) = (tr.rhs(zp, 2) - tr.rhs(zm, 2)) / (2 * h);
    }
    MatrixXd AB(nx, nx + nu);
    AB << A, B;
    rhs_err = (AB - fd).norm() / fd.norm();
  }
  {
    // Rollout sensitivities on both smooth fixtures.
    for (const SkeletonModel* m : {&test::pendulum(), &test::two_link()}) {
      std::mt19937_64 rng(105);
      GeneralizedState s = test::random_state(*m, rng);
      ControlTrajectory c;
      c.contact = ContactInput::Mode::none;
      for (int k = 0; k < 5; ++k) {
        c.times.push_back(0.1 * k);
        c.tau.push_back(test::random_vector(rng, m->dof(), 2.0));
      }
      SensitivitySeed su, sx;
      for (int k = 0; k < 5; ++k) su.dtau.push_back(test::random_vector(rng, m->dof(), 1.0));
      sx.dx0 = test::random_vector(rng, 2 * m->dof(), 1.0);
      sx.dx0.head(6).setZero();
      sx.dx0.segment(m->dof(), 6).setZero();
      const auto sens = rollout_with_sensitivities(*m, s, c, 0.5, 0.01, {su, sx});
      auto final_state = [&](const ControlTrajectory& cc, const GeneralizedState& x0) {
        return to_ode_state(rollout(*m, x0, cc, 0.5, 0.01).trajectory.states.back());
      };
      const double h = 1e-5;
      ControlTrajectory cp = c, cm = c;
      for (int k = 0; k < 5; ++k) {
        cp.tau[k] += h * su.dtau[k];
        cm.tau[k] -= h * su.dtau[k];
      }
      const VectorXd fu = (final_state(cp, s) - final_state(cm, s)) / (2 * h);
      const VectorXd xp = to_ode_state(s) + h * sx.dx0, xm = to_ode_state(s) - h * sx.dx0;
      const VectorXd fx = (final_state(c, from_ode_state(xp)) - final_state(c, from_ode_state(xm))) / (2 * h);
      sens_err = std::max({sens_err, test::rel_err(sens.directional[0].back(), fu),
                           test::rel_err(sens.directional[1].back(), fx)});
    }
  }
  o.detail << "marker J " << sci(marker_err) << ", contact J " << sci(contact_err) << ", collocation rhs "
           << sci(rhs_err) << ", rollout sensitivities " << sci(sens_err) << " (relative)";
  o.require(marker_err < 1e-4 && contact_err < 1e-4, "point Jacobians within 1e-4");
  o.require(rhs_err < 1e-4, "collocation Jacobian within 1e-4");
  o.require(sens_err < 1e-4, "sensitivities within 1e-4");
}

// --- 4. integrator -------------------------------------------------------------

GeneralizedState pendulum_at(double theta, double rate = 0.0) {
  GeneralizedState s = GeneralizedState::zero(test::pendulum());
  s.q(6) = theta;
  s.qdot(6) = rate;
  return s;
}

void integrator_order(Outcome& o) {
  const auto& m = test::pendulum();
  const auto passive = ControlTrajectory::constant(VectorXd::Zero(m.dof()), ContactInput::Mode::none);
  auto final_angle = [&](double dt) { return rollout(m, pendulum_at(1.0), passive, 1.0, dt).trajectory.states.back().q(6); };
  const double a = final_angle(0.02), b = final_angle(0.01), c = final_angle(0.005);
  const double order = std::log2(std::abs(a - b) / std::abs(b - c));

  const auto x0 = pendulum_at(1.0, 0.5);
  const auto r = rollout(m, x0, passive, 1.0, 1e-3);
  const double E0 = kinetic_energy(m, x0) + potential_energy(m, x0);
  double drift = 0.0;
  for (const auto& s : r.trajectory.states)
    drift = std::max(drift, std::abs(kinetic_energy(m, s) + potential_energy(m, s) - E0) / std::abs(E0));
  o.detail << "rk4 observed order " << sci(order) << ", energy drift " << sci(drift) << " over 1 s at dt 1e-3";
  o.require(r.ok, "rollout ok");
  o.require(order >= 3.8, "order >= 3.8");
  o.require(drift < 1e-5, "drift < 1e-5");
}

// --- 5. contact law --------------------------------------------------------------

void contact_law(Outcome& o) {
  ModelDescription d;
  d.name = "ball";
  SegmentSpec seg;
  seg.name = "ball";
  seg.mass = 1.0;
  seg.inertia = Vector3d::Constant(0.01).asDiagonal();
  d.segments.push_back(seg);
  ContactSphereSpec c;
  c.segment = "ball";
  c.radius = 0.1;
  c.k_n = 1e5;
  d.contact_spheres.push_back(c);
  const SkeletonModel ball(d);

  GeneralizedState s = GeneralizedState::zero(ball);
  double above = 0.0;
  for (double delta : {-1.0, -0.01, -1e-9, 0.0}) {
    s.q(1) = 0.1 - delta;
    s.qdot(1) = -0.3;
    above = std::max(above, contact_forces(ball, s).lambda_total.norm());
  }
  s.q(1) = 0.09;
  s.qdot.setZero();
  const double fn = contact_forces(ball, s).lambda_spheres[0].normal.norm();

  const auto& m = test::full_body();
  std::mt19937_64 rng(106);
  double friction_excess = 0.0, aggregation = 0.0;
  int loaded = 0;
  for (int t = 0; t < 500; ++t) {
    GeneralizedState fs = GeneralizedState::zero(m);
    fs.q(1) = test::uniform(rng, 0.9, 0.97);
    fs.q.tail(m.rot_dof()) = 0.05 * test::random_vector(rng, m.rot_dof(), 1.0);
    fs.qdot = test::random_vector(rng, m.dof(), 1.0);
    const auto k = contact_forces(m, fs);
    Vector3d sum = Vector3d::Zero();
    for (int i = 0; i < m.sphere_count(); ++i) {
      const auto& f = k.lambda_spheres[i];
      friction_excess = std::max(friction_excess, f.tangential.norm() - m.contact_spheres()[i].mu * f.normal.norm());
      sum += f.normal + f.tangential;
      loaded += f.normal.norm() > 0.0;
    }
    aggregation = std::max(aggregation, (k.lambda_total - sum).norm());
  }
  o.detail << "force at delta<=0: " << sci(above) << " N, |F_n| at 1 cm = " << fn << " N, max(|F_t| - mu|F_n|) = "
           << sci(friction_excess) << ", aggregation error " << sci(aggregation) << " (" << loaded
           << " loaded sphere samples)";
  o.require(above == 0.0, "zero force without penetration");
  o.require(std::abs(fn - 100.0) < 1e-9, "100 N at 1 cm");
  o.require(friction_excess <= 1e-12, "friction cone");
  o.require(aggregation <= 1e-9, "aggregation");
  o.require(loaded > 100, "enough loaded samples");
}

// --- 6. IK -----------------------------------------------------------------------

MarkerFrame synthesize(const SkeletonModel& m, const VectorXd& q) {
  MarkerFrame f;
  f.positions = marker_positions(m, {q, VectorXd::Zero(m.dof())});
  return f;
}

double pose_error(const VectorXd& a, const VectorXd& b) {
  const Matrix3d Ra = rot::exp_map<double>(Vector3d(a.segment<3>(3)));
  const Matrix3d Rb = rot::exp_map<double>(Vector3d(b.segment<3>(3)));
  const double root = rot::log_map(Ra.transpose() * Rb).norm();
  return std::max({root, (a.head<3>() - b.head<3>()).cwiseAbs().maxCoeff(),
                   (a.tail(a.size() - 6) - b.tail(b.size() - 6)).cwiseAbs().maxCoeff()});
}

void ik_recovery(Outcome& o) {
  const auto& m = test::full_body();
  std::mt19937_64 rng(107);
  double worst = 0.0;
  int converged = 0, observable = 0;
  for (int t = 0; t < 100; ++t) {
    const VectorXd q = test::random_q(m, rng, 0.9);
    const auto f = synthesize(m, q);
    observable += is_observable(m, f);
    VectorXd init = q + test::random_vector(rng, q.size(), 0.3);
    init = init.cwiseMax(m.lower_limits()).cwiseMin(m.upper_limits());
    const auto r = solve_ik_frame(m, f, {init, VectorXd::Zero(m.dof())});
    converged += r.converged;
    worst = std::max(worst, pose_error(r.state.q, q));
  }
  const double sigma = 0.002;
  std::normal_distribution<double> noise(0.0, sigma);
  double sum = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const VectorXd q = test::random_q(m, rng, 0.8);
    auto f = synthesize(m, q);
    for (auto& p : f.positions)
      for (int i = 0; i < 3; ++i) p(i) += noise(rng);
    sum += solve_ik_frame(m, f, {q, VectorXd::Zero(m.dof())}).rms_residual;
  }
  const double ratio = sum / trials / sigma;
  o.detail << "noiseless max error " << sci(worst) << " rad over 100 poses (" << converged << " converged, "
           << observable << " observable); noisy RMS residual / sigma = " << sci(ratio);
  o.require(observable == 100, "all poses observable");
  o.require(converged == 100 && worst < 1e-6, "recovery < 1e-6");
  o.require(ratio > 0.5 && ratio < 1.5, "residual within 50% of the noise");
}

// --- 7. OCP ------------------------------------------------------------------------

void ocp_recovery(Outcome& o) {
  const auto fit = test::pendulum_fit();
  auto t0 = Clock::now();
  const auto sol = solve_ocp(fit.problem);
  const double t_fit = seconds_since(t0);
  double se = 0.0, peak = 0.0;
  for (std::size_t k = 0; k < fit.tau_true.size(); ++k) {
    se += std::pow(sol.tau[k](6) - fit.tau_true[k], 2);
    peak = std::max(peak, std::abs(fit.tau_true[k]));
  }
  const double rel = std::sqrt(se / fit.tau_true.size()) / peak;

  const auto p = test::standing_problem();
  t0 = Clock::now();
  const auto stand = solve_ocp(p);
  const double t_stand = seconds_since(t0);
  const auto ref = extract_reference_kinetics(p, stand);
  double fy = 0.0;
  for (const auto& k : ref.kinetics) fy += k.lambda_total.y();
  fy /= ref.kinetics.size();
  const double w = test::body_weight(p.model);

  o.detail << "pendulum torque RMS/peak " << sci(rel) << " (defect " << sci(sol.max_defect) << ", " << sci(t_fit)
           << " s); standing mean vertical force " << fy << " N vs weight " << w << " N (defect "
           << sci(stand.max_defect) << ", " << sci(t_stand) << " s)";
  o.require(sol.status == OcpStatus::converged && stand.status == OcpStatus::converged, "both converged");
  o.require(rel < 0.02, "torque RMS < 2% of peak");
  o.require(std::abs(fy - w) < 0.02 * w, "vertical force within 2% of weight");
  o.require(sol.max_defect < 1e-6 && stand.max_defect < 1e-6, "defects < 1e-6");
  o.require(t_fit < 60.0 && t_stand < 60.0, "each run < 60 s");
}

// --- 8. roundtrip --------------------------------------------------------------------

Trajectory driven(const SkeletonModel& m, const GeneralizedState& x0, unsigned seed, double amplitude,
                  ContactInput::Mode contact) {
  std::mt19937_64 rng(seed);
  ControlTrajectory ct;
  ct.contact = contact;
  for (double t = 0.0; t < 0.5 + 1e-12; t += 0.05) {
    VectorXd tau = VectorXd::Zero(m.dof());
    tau.tail(m.rot_dof()) = test::random_vector(rng, m.rot_dof(), amplitude);
    ct.times.push_back(t);
    ct.tau.push_back(tau);
  }
  const auto r = rollout(m, x0, ct, 0.5, 1e-3);
  if (!r.ok) throw NumericalError("fixture rollout failed: " + r.error);
  return r.trajectory;
}

void roundtrip(Outcome& o) {
  RoundtripOptions none;
  none.contact = ContactInput::Mode::none;
  GeneralizedState x0 = GeneralizedState::zero(test::pendulum());
  x0.q(6) = 0.7;
  const auto r1 = roundtrip_check(test::pendulum(), driven(test::pendulum(), x0, 1, 5.0, none.contact), none);

  GeneralizedState y0 = GeneralizedState::zero(test::two_link());
  y0.q(6) = -1.0;
  y0.q(7) = 0.5;
  const auto r2 = roundtrip_check(test::two_link(), driven(test::two_link(), y0, 2, 20.0, none.contact), none);

  const auto& fb = test::full_body();
  std::mt19937_64 rng(108);
  GeneralizedState z0{test::random_q(fb, rng, 0.3), test::random_vector(rng, fb.dof(), 0.5)};
  z0.q(1) = 3.0;
  const auto r3 = roundtrip_check(fb, driven(fb, z0, 3, 0.5, ContactInput::Mode::automatic));

  const double worst = std::max({r1.max_q_residual(), r2.max_q_residual(), r3.max_q_residual()});
  o.detail << "max q residual over 0.5 s: pendulum " << sci(r1.max_q_residual()) << ", two-link "
           << sci(r2.max_q_residual()) << ", full body " << sci(r3.max_q_residual()) << " rad";
  o.require(r1.ok && r2.ok && r3.ok, "no divergence");
  o.require(worst < 1e-6, "q residual < 1e-6");
}

// --- 9. loss ablation ----------------------------------------------------------------

void loss_ablation(Outcome& o) {
  int better = 0;
  o.detail << "rollout q-drift kinetics-only -> with consistency:";
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto data = test::pendulum_training(seed);
    const auto a = fit_surrogate_id(test::pendulum(), data.train, test::ablation_options(false));
    const auto b = fit_surrogate_id(test::pendulum(), data.train, test::ablation_options(true));
    const double da = test::rollout_drift(a.surrogate, data), db = test::rollout_drift(b.surrogate, data);
    better += db < da;
    o.detail << " seed " << seed << " " << sci(da) << " -> " << sci(db) << ";";
  }
  o.detail << " improved on " << better << "/5";
  o.require(better == 5, "direction holds on every seed");
}

// --- 10. CLI ------------------------------------------------------------------------------

int run_cli(const std::string& dir, const std::string& args) {
  const std::string cmd =
      "cd '" + dir + "' && '" + std::string(MSK_CLI_PATH) + "' " + args + " 2>> '" + dir + "/stderr.txt'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void cli_determinism(Outcome& o, Clock::time_point suite_start) {
  const std::string two = test::fixture("two_link.json"), pend = test::fixture("pendulum.json");
  const std::vector<std::string> cmds = {
      "simulate --model " + pend + " --dt 1e-3 --horizon 1 --q0 0,0,0,0,0,0,0.4 --out pend.csv --emit-gnuplot",
      "simulate --model " + two +
          " --dt 1e-2 --horizon 0.5 --q0 0,0,0,0,0,0,-0.6,0.9 --qdot0 0,0,0,0,0,0,1.5,-2 --out sim.csv",
      "markers --model " + two + " --input sim.csv --noise 1e-3 --seed 7 --out markers.csv",
      "ik --model " + two + " --input markers.csv --out states.csv",
      "id --model " + two + " --contact none --input sim.csv --out kin.csv",
      "roundtrip --model " + pend + " --input pend.csv --out report.csv",
      "train --model " + two + " --contact none --input sim.csv --kinetics kin.csv --steps 5 --out sur.json",
      "ocp --input problem.json --grid 4 --out sol.csv",
  };
  std::vector<std::string> dirs;
  int failures = 0;
  for (const char* tag : {"a", "b"}) {
    const fs::path dir = fs::temp_directory_path() / (std::string("msk_acceptance_cli_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    dirs.push_back(dir.string());
    io::write_text((dir / "problem.json").string(),
                   R"({"model": ")" + pend + R"(", "reference": "pend.csv", "contact": "none",
                       "grid": {"start": 0, "end": 0.2}})");
    for (const auto& c : cmds) failures += run_cli(dir.string(), c) != 0;
  }
  int files = 0, identical = 0, csvs = 0, headed = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename().string();
    if (name == "stderr.txt" || name == "problem.json") continue;
    ++files;
    const auto a = io::read_text(entry.path().string());
    const fs::path other = fs::path(dirs[1]) / name;
    identical += fs::exists(other) && a == io::read_text(other.string());
    if (entry.path().extension() == ".csv") {
      ++csvs;
      headed += a.rfind("# schema_version=1\n", 0) == 0;
    }
  }
  const double elapsed = seconds_since(suite_start);
  o.detail << failures << " failed invocations; " << identical << "/" << files << " outputs byte-identical across reruns; "
           << headed << "/" << csvs << " CSVs carry the schema line; acceptance wall time " << sci(elapsed) << " s";
  o.require(failures == 0, "all commands exit 0");
  o.require(files == 13 && identical == files, "byte-identical reruns");
  o.require(csvs > 0 && headed == csvs, "schema headers");
  o.require(elapsed < 300.0, "suite under 5 minutes");
}

}  // namespace

int main() {
  const auto start = Clock::now();
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"dynamics identity", dynamics_identity},
      {"mass matrix symmetry and positive definiteness", mass_matrix_properties},
      {"Jacobian and sensitivity finite-difference checks", jacobian_checks},
      {"rk4 order and energy drift", integrator_order},
      {"contact law", contact_law},
      {"IK synthesize-and-recover and noise floor", ik_recovery},
      {"OCP torque recovery and standing load", ocp_recovery},
      {"inverse-forward roundtrip", roundtrip},
      {"consistency-loss ablation over 5 seeds", loss_ablation},
      {"CLI determinism and schema", [&](Outcome& o) { cli_determinism(o, start); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      criteria[i].run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].name << ": " << o.detail.str()
              << " (" << sci(seconds_since(t0)) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
