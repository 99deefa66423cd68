#include <chrono>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "ocp_fixtures.hpp"

using namespace msk;

namespace {

// Implicit trapezoidal stepping by fixed-point iteration on ode_rhs, so the
// collocation defects vanish up to round-off.
std::vector<VectorXd> trapezoid_march(const SkeletonModel& model, const VectorXd& x0,
                                      const std::vector<VectorXd>& tau, double h) {
  std::vector<VectorXd> xs{x0};
  const auto none = ContactInput::none();
  for (std::size_t k = 0; k + 1 < tau.size(); ++k) {
    const VectorXd fk = ode_rhs(model, xs.back(), tau[k], none);
    VectorXd x = xs.back() + h * fk;
    for (int it = 0; it < 200; ++it) {
      const VectorXd next = xs.back() + 0.5 * h * (fk + ode_rhs(model, x, tau[k + 1], none));
      const double change = (next - x).lpNorm<Eigen::Infinity>();
      x = next;
      if (change < 1e-16) break;
    }
    xs.push_back(x);
  }
  return xs;
}

double tracking(const ObjectiveBreakdown& b) { return b.q + b.qdot + b.qddot; }

}  // namespace

TEST_SUITE("ocp") {
  TEST_CASE("decision and defect dimensions") {
    OcpProblem p(test::two_link());
    p.times = test::uniform_grid(5, 0.1);
    for (int k = 0; k < 5; ++k) {
      p.q_ref.push_back(VectorXd::Zero(8));
      p.qdot_ref.push_back(VectorXd::Zero(8));
      p.qddot_ref.push_back(VectorXd::Zero(8));
    }
    const Transcription t(p);
    CHECK(p.control_count() == 2);
    CHECK(t.decision_size() == 5 * (2 * 8 + 2));
    CHECK(t.defect_size() == 4 * 2 * 8);

    OcpProblem body(test::full_body());
    CHECK(body.control_count() == 8 + 41);
  }

  TEST_CASE("control torque and bounds") {
    const auto& m = test::full_body();
    const VectorXd lo = control_lower(m), hi = control_upper(m);
    CHECK(lo.head(8).isZero());
    CHECK((lo.tail(41).array() == -1.0).all());
    CHECK((hi.array() == 1.0).all());
    const auto s = GeneralizedState::zero(m);
    VectorXd u = VectorXd::Zero(49);
    CHECK(control_torque(m, u, s).isZero());
    u(8) = 0.5;  // first motor: lumbar, bound 300
    const VectorXd tau = control_torque(m, u, s);
    CHECK(tau(m.actuated_dofs()[0].first) == doctest::Approx(150.0));
    CHECK(tau.head(6).isZero());
    CHECK_THROWS_AS(control_torque(m, VectorXd::Zero(3), s), DimensionError);
  }

  TEST_CASE("feasible rollout gives zero defects and tracking cost") {
    const auto& model = test::two_link();
    const int N = 11;
    const double h = 0.02;
    std::vector<VectorXd> tau, u;
    for (int k = 0; k < N; ++k) {
      VectorXd uk(2);
      uk << 0.2 * std::sin(k * 0.3), -0.1 + 0.02 * k;
      u.push_back(uk);
      VectorXd t = VectorXd::Zero(8);
      t(6) = 100.0 * uk(0);
      t(7) = 100.0 * uk(1);
      tau.push_back(t);
    }
    VectorXd x0 = VectorXd::Zero(16);
    x0(6) = -0.7;
    x0(7) = 0.9;
    x0(14) = 0.5;
    const auto xs = trapezoid_march(model, x0, tau, h);
    OcpProblem p(model);
    p.times = test::uniform_grid(N, h);
    p.contact = ContactInput::Mode::none;
    for (int k = 0; k < N; ++k) {
      p.q_ref.push_back(xs[k].head(8));
      p.qdot_ref.push_back(xs[k].tail(8));
      p.qddot_ref.push_back(ode_rhs(model, xs[k], tau[k], ContactInput::none()).tail(8));
    }
    const Transcription t(p);
    const VectorXd z = t.pack(xs, u);
    CHECK(t.defects(z).lpNorm<Eigen::Infinity>() < 1e-10);
    const auto b = t.objective(z);
    CHECK(b.q < 1e-12);
    CHECK(b.qdot < 1e-12);
    CHECK(b.qddot < 1e-12);
  }

  TEST_CASE("effort-only objective is the effort quadrature") {
    auto fit = test::pendulum_fit(6, 0.05);
    auto& p = fit.problem;
    p.weights = {2.0, 0.0, 0.0, 0.0};
    const Transcription t(p);
    std::vector<VectorXd> xs, us;
    for (int k = 0; k < 6; ++k) {
      VectorXd x(14);
      x << p.q_ref[k], p.qdot_ref[k];
      xs.push_back(x);
      us.push_back(VectorXd::Constant(1, 0.1 * k));
    }
    const auto b = t.objective(t.pack(xs, us));
    double expect = 0.0;
    for (int k = 0; k < 6; ++k) expect += (k == 0 || k == 5 ? 0.025 : 0.05) * 2.0 * std::pow(0.1 * k, 2);
    CHECK(b.total() == doctest::Approx(expect).epsilon(1e-14));
    CHECK(b.q == 0.0);
  }

  TEST_CASE("effort-only solve returns zero controls") {
    auto fit = test::pendulum_fit(11, 0.05);
    auto& p = fit.problem;
    p.weights = {1.0, 0.0, 0.0, 0.0};
    p.control_guess.assign(11, VectorXd::Constant(1, 0.3));
    const auto sol = solve_ocp(p);
    CHECK(sol.status == OcpStatus::converged);
    CHECK(sol.max_defect < 1e-6);
    for (const auto& u : sol.controls) CHECK(u.lpNorm<Eigen::Infinity>() < 1e-6);
  }

  TEST_CASE("pendulum simulate-then-fit recovers the torque") {
    const auto fit = test::pendulum_fit();
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve_ocp(fit.problem);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(sol.status == OcpStatus::converged);
    CHECK(sol.max_defect < 1e-6);
    double se = 0.0, peak = 0.0;
    for (std::size_t k = 0; k < fit.tau_true.size(); ++k) {
      se += std::pow(sol.tau[k](6) - fit.tau_true[k], 2);
      peak = std::max(peak, std::abs(fit.tau_true[k]));
    }
    const double rms = std::sqrt(se / fit.tau_true.size());
    MESSAGE("torque RMS / peak = " << rms / peak << ", " << secs << " s");
    CHECK(rms < 0.02 * peak);
    CHECK(secs < 60.0);
  }

  TEST_CASE("accepted merit values never increase within a subproblem") {
    const auto fit = test::pendulum_fit(21, 0.05);
    const auto sol = solve_ocp(fit.problem);
    REQUIRE(!sol.merit_history.empty());
    for (const auto& trace : sol.merit_history)
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
    CHECK(sol.outer_iterations == static_cast<int>(sol.merit_history.size()));
  }

  TEST_CASE("two-link tracking beats the zero-control baseline") {
    const auto p = test::two_link_tracking();
    const auto sol = solve_ocp(p);
    CHECK(sol.status == OcpStatus::converged);
    CHECK(sol.max_defect < 1e-6);

    ControlTrajectory zero = ControlTrajectory::constant(VectorXd::Zero(8), ContactInput::Mode::none);
    GeneralizedState x0{p.q_ref[0], p.qdot_ref[0]};
    const double h = p.times[1] - p.times[0];
    const auto ro = rollout(p.model, x0, zero, p.times.back(), h);
    std::vector<VectorXd> xs, us;
    for (const auto& s : ro.trajectory.states) {
      VectorXd x(16);
      x << s.q, s.qdot;
      xs.push_back(x);
      us.push_back(VectorXd::Zero(2));
    }
    const Transcription t(p);
    const double baseline = tracking(t.objective(t.pack(xs, us)));
    MESSAGE("tracking " << tracking(sol.breakdown) << " vs baseline " << baseline);
    CHECK(tracking(sol.breakdown) * 10.0 <= baseline);

    const double gap = test::rollout_gap(p, sol);
    MESSAGE("rollout gap " << gap);
    CHECK(gap < 5e-3);
  }

  TEST_CASE("standing solution carries the body weight") {
    const auto p = test::standing_problem();
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve_ocp(p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(sol.status == OcpStatus::converged);
    CHECK(sol.max_defect < 1e-6);
    const auto ref = extract_reference_kinetics(p, sol);
    REQUIRE(ref.kinetics.size() == p.times.size());
    double fy = 0.0;
    for (const auto& k : ref.kinetics) fy += k.lambda_total.y();
    fy /= ref.kinetics.size();
    const double w = test::body_weight(p.model);
    MESSAGE("mean vertical force " << fy << " N, weight " << w << " N, " << secs << " s");
    CHECK(std::abs(fy - w) < 0.02 * w);
    CHECK(secs < 60.0);
    for (const auto& u : sol.controls) CHECK((u.head(8).array() >= 0.0).all());
  }

  TEST_CASE("reference kinetics for zero controls in the air") {
    const auto fit = test::pendulum_fit(4, 0.05);
    OcpSolution sol;
    sol.times = fit.problem.times;
    for (int k = 0; k < 4; ++k) {
      sol.states.push_back({fit.problem.q_ref[k], fit.problem.qdot_ref[k]});
      sol.controls.push_back(VectorXd::Zero(1));
    }
    auto p = fit.problem;
    p.contact = ContactInput::Mode::automatic;
    const auto ref = extract_reference_kinetics(p, sol);
    CHECK(ref.kinetics.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(ref.tau_full[k].isZero());
      CHECK(ref.kinetics[k].lambda_total.isZero());
      CHECK(ref.kinetics[k].tau.size() == 1);
    }
  }

  TEST_CASE("problem validation") {
    auto p = test::pendulum_fit(5, 0.05).problem;
    auto bad = p;
    bad.times[2] += 0.01;
    CHECK_THROWS_AS(Transcription{bad}, ValidationError);
    bad = p;
    bad.times.resize(1);
    CHECK_THROWS_AS(Transcription{bad}, ValidationError);
    bad = p;
    bad.weights.q = -1.0;
    CHECK_THROWS_AS(Transcription{bad}, ValidationError);
    bad = p;
    bad.q_ref.pop_back();
    CHECK_THROWS_AS(Transcription{bad}, DimensionError);
    bad = p;
    bad.control_guess.assign(5, VectorXd::Zero(3));
    CHECK_THROWS_AS(Transcription{bad}, DimensionError);
    CHECK_THROWS_AS(OcpWeights::parse("1,2,3"), ValidationError);
    CHECK_THROWS_AS(OcpWeights::parse("1,2,x,4"), ValidationError);
    const auto w = OcpWeights::parse("0.5,1,2,3e-3");
    CHECK(w.qddot == 3e-3);
  }

  TEST_CASE("non-finite dynamics name the knot") {
    auto p = test::pendulum_fit(5, 0.05).problem;
    p.q_ref[3](6) = std::numeric_limits<double>::quiet_NaN();
    try {
      solve_ocp(p);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("knot 3") != std::string::npos);
    }
  }
}
