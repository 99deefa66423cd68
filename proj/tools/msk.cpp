// msk: command-line pipelines over the musculoskeletal library.
//
//   msk simulate  --model M [--input controls.csv] --out traj.csv
//   msk markers   --model M --input traj.csv --out markers.csv [--noise S --seed N]
//   msk ik        --model M --input markers.csv --out states.csv
//   msk id        --model M --input traj.csv --out kinetics.csv
//   msk ocp       --input problem.json --out solution.csv [--grid N] [--weights w1,w2,w3,w4]
//   msk roundtrip --model M --input traj.csv --out report.csv
//   msk train     --model M --input traj.csv --kinetics kin.csv --out surrogate.json
//
// Exit codes: 0 success, 1 numerical failure, 2 I/O or validation failure.
// Failures print one line on stderr:  msk: error code=<c> kind=<k> message="..."

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "msk/consistency.hpp"
#include "msk/dynamics.hpp"
#include "msk/ik.hpp"
#include "msk/integrator.hpp"
#include "msk/io.hpp"
#include "msk/kinematics.hpp"
#include "msk/log.hpp"
#include "msk/ocp.hpp"

using namespace msk;

namespace {

struct RunConfig {
  std::string command;
  std::string model, input, out, kinetics, initial;
  double dt = 1e-3;
  double horizon = 1.0;
  std::string method = "rk4";
  std::string interpolation = "zoh";
  std::string contact = "automatic";
  std::string weights;
  std::string loss_weights = "1,1,1,1";
  std::string optimizer = "adam";
  std::vector<double> q0, qdot0;
  int grid = 0;
  int degree = 2;
  int steps = 200;
  int window = 1;
  double learning_rate = 1e-2;
  double ridge = 1e-6;
  double noise = 0.0;
  double cutoff = 0.0;
  std::uint64_t seed = 0;
  bool gnuplot = false;
};

/// Thrown for a failed run whose outputs were still written.
struct RunFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_path(const std::string& value, const std::string& flag, const std::string& command) {
  if (value.empty()) throw ValidationError(command + ": " + flag + " is required");
}

void require_positive(double value, const std::string& flag) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ValidationError(flag + " must be positive and finite");
}

ContactInput::Mode contact_mode(const std::string& name) {
  if (name == "automatic") return ContactInput::Mode::automatic;
  if (name == "none") return ContactInput::Mode::none;
  throw ValidationError("--contact must be automatic or none, got '" + name + "'");
}

ContactInput contact_input(ContactInput::Mode mode) {
  return mode == ContactInput::Mode::none ? ContactInput::none() : ContactInput::automatic();
}

IntegratorOptions integrator(const RunConfig& c) {
  IntegratorOptions o;
  o.method = parse_method(c.method);
  return o;
}

LossWeights parse_loss_weights(const std::string& text) {
  std::vector<double> w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      w.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("--loss-weights: bad number '" + item + "'");
    }
  }
  if (w.size() != 4) throw ValidationError("--loss-weights needs 4 comma-separated values");
  LossWeights lw{w[0], w[1], w[2], w[3]};
  lw.validate();
  return lw;
}

void emit_plot(const RunConfig& c, const std::string& csv, const std::string& title) {
  if (c.gnuplot) io::write_gnuplot(csv, title);
}

GeneralizedState initial_state(const RunConfig& c, const SkeletonModel& model) {
  GeneralizedState x0 = GeneralizedState::zero(model);
  if (!c.initial.empty()) {
    auto traj = io::read_trajectory(c.initial, model);
    if (traj.size() == 0) throw ParseError(c.initial + ": no rows");
    x0 = traj.states.front();
  }
  auto fill = [&](const std::vector<double>& v, VectorXd& dst, const char* flag) {
    if (v.empty()) return;
    if (static_cast<int>(v.size()) != model.dof())
      throw ValidationError(std::string(flag) + " needs " + std::to_string(model.dof()) + " values, got " +
                            std::to_string(v.size()));
    dst = Eigen::Map<const VectorXd>(v.data(), v.size());
  };
  fill(c.q0, x0.q, "--q0");
  fill(c.qdot0, x0.qdot, "--qdot0");
  return x0;
}

int cmd_simulate(const RunConfig& c) {
  require_path(c.model, "--model", "simulate");
  require_path(c.out, "--out", "simulate");
  require_positive(c.dt, "--dt");
  require_positive(c.horizon, "--horizon");
  auto model = load_model(c.model);
  const auto mode = contact_mode(c.contact);
  ControlTrajectory controls = c.input.empty() ? ControlTrajectory::constant(VectorXd::Zero(model.dof()), mode)
                                               : io::read_controls(c.input, model);
  controls.contact = mode;
  if (c.interpolation == "linear") controls.interpolation = Interpolation::linear;
  else if (c.interpolation != "zoh") throw ValidationError("--interp must be zoh or linear");
  controls.validate(model);

  auto result = rollout(model, initial_state(c, model), controls, c.horizon, c.dt, integrator(c));
  io::write_trajectory(c.out, model, result.trajectory);
  emit_plot(c, c.out, "simulate " + model.name());
  log_info("simulate: wrote " + std::to_string(result.trajectory.size()) + " frames to " + c.out);
  if (!result.ok) throw RunFailure("rollout failed: " + result.error + " (partial trajectory written to '" + c.out + "')");
  return 0;
}

int cmd_markers(const RunConfig& c) {
  require_path(c.model, "--model", "markers");
  require_path(c.input, "--input", "markers");
  require_path(c.out, "--out", "markers");
  if (!(c.noise >= 0.0)) throw ValidationError("--noise must be >= 0");
  auto model = load_model(c.model);
  auto traj = io::read_trajectory(c.input, model);
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<MarkerFrame> frames;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    MarkerFrame f;
    f.time = traj.times[k];
    f.positions = marker_positions(model, traj.states[k]);
    if (c.noise > 0.0)
      for (auto& p : f.positions)
        for (int a = 0; a < 3; ++a) p(a) += c.noise * gauss(rng);
    frames.push_back(std::move(f));
  }
  io::write_markers(c.out, model, frames);
  emit_plot(c, c.out, "markers " + model.name());
  return 0;
}

int cmd_ik(const RunConfig& c) {
  require_path(c.model, "--model", "ik");
  require_path(c.input, "--input", "ik");
  require_path(c.out, "--out", "ik");
  auto model = load_model(c.model);
  auto frames = io::read_markers(c.input, model);
  if (frames.empty()) throw ValidationError(c.input + ": no marker frames");
  auto sol = solve_ik_sequence(model, frames);

  Trajectory traj;
  traj.times = sol.times;
  traj.states = sol.states;
  if (sol.states.size() >= 3) {
    std::vector<VectorXd> q;
    for (const auto& s : sol.states) q.push_back(s.q);
    DifferentiationOptions d;
    if (c.cutoff > 0.0) {
      d.smooth = true;
      d.cutoff_hz = c.cutoff;
    }
    const double dt = sol.times[1] - sol.times[0];
    for (std::size_t k = 1; k < sol.times.size(); ++k)
      if (std::abs(sol.times[k] - sol.times[k - 1] - dt) > 1e-9 * std::max(1.0, dt))
        throw ValidationError(c.input + ": non-uniform time grid");
    auto diff = differentiate_trajectory(q, dt, d);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      if (d.smooth) traj.states[k].q = diff.q[k];
      traj.states[k].qdot = diff.qdot[k];
    }
    traj.qddot = diff.qddot;
  }
  auto table = io::trajectory_table(model, traj);
  table.columns.push_back("rms_residual");
  table.columns.push_back("converged");
  int failed = 0;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    table.rows[k].push_back(sol.residuals[k]);
    table.rows[k].push_back(sol.converged[k] ? 1.0 : 0.0);
    failed += !sol.converged[k];
  }
  io::write_table(c.out, table);
  emit_plot(c, c.out, "ik " + model.name());
  if (failed > 0) log_warn("ik: " + std::to_string(failed) + " frame(s) did not converge");
  return 0;
}

int cmd_id(const RunConfig& c) {
  require_path(c.model, "--model", "id");
  require_path(c.input, "--input", "id");
  require_path(c.out, "--out", "id");
  auto model = load_model(c.model);
  auto traj = io::read_trajectory(c.input, model);
  const auto contact = contact_input(contact_mode(c.contact));
  std::vector<KineticState> kin;
  std::vector<VectorXd> roots;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    VectorXd tau = inverse_dynamics(model, traj.states[k], traj.qddot[k], contact);
    KineticState ks;
    ks.tau = rotational_part(tau);
    if (contact.mode() == ContactInput::Mode::automatic)
      ks.lambda_total = contact_forces(model, traj.states[k]).lambda_total;
    kin.push_back(std::move(ks));
    roots.push_back(root_part(tau));
  }
  io::write_kinetics(c.out, model, traj.times, kin, roots);
  emit_plot(c, c.out, "id " + model.name());
  return 0;
}

int cmd_ocp(const RunConfig& c) {
  require_path(c.input, "--input", "ocp");
  require_path(c.out, "--out", "ocp");
  auto file = io::read_ocp_problem_file(c.input);
  if (!c.model.empty()) file.model_path = c.model;
  if (c.grid != 0) {
    if (c.grid < 2) throw ValidationError("--grid needs at least 2 knots");
    file.knots = c.grid;
  }
  if (!c.weights.empty()) file.weights = OcpWeights::parse(c.weights);
  auto model = load_model(file.model_path);
  auto reference = io::read_trajectory(file.reference_path, model);
  auto problem = io::build_ocp_problem(model, file, reference);

  const auto t0 = std::chrono::steady_clock::now();
  auto sol = solve_ocp(problem);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto paths = io::write_ocp_solution(c.out, problem, sol);
  for (const auto& p : paths) emit_plot(c, p, "ocp " + model.name());
  log_info("ocp: " + to_string(sol.status) + " in " + std::to_string(secs) + " s, max defect " +
           std::to_string(sol.max_defect));
  if (sol.status != OcpStatus::converged) {
    std::ostringstream msg;
    msg << "ocp did not converge (status " << to_string(sol.status) << ", max defect " << sol.max_defect << ")";
    throw RunFailure(msg.str());
  }
  return 0;
}

int cmd_roundtrip(const RunConfig& c) {
  require_path(c.model, "--model", "roundtrip");
  require_path(c.input, "--input", "roundtrip");
  require_path(c.out, "--out", "roundtrip");
  auto model = load_model(c.model);
  auto traj = io::read_trajectory(c.input, model);
  RoundtripOptions opt;
  opt.contact = contact_mode(c.contact);
  opt.integrator = integrator(c);
  auto report = roundtrip_check(model, traj, opt);
  io::write_roundtrip_report(c.out, report);
  emit_plot(c, c.out, "roundtrip " + model.name());
  if (!report.ok) throw RunFailure("roundtrip diverged: " + report.error);
  return 0;
}

int cmd_train(const RunConfig& c) {
  require_path(c.model, "--model", "train");
  require_path(c.input, "--input", "train");
  require_path(c.kinetics, "--kinetics", "train");
  require_path(c.out, "--out", "train");
  auto model = load_model(c.model);
  TrainingSequence seq;
  seq.trajectory = io::read_trajectory(c.input, model);
  auto kin = io::read_kinetics(c.kinetics, model);
  if (kin.times.size() != seq.trajectory.size())
    throw ValidationError(c.kinetics + ": " + std::to_string(kin.times.size()) + " rows, trajectory has " +
                          std::to_string(seq.trajectory.size()));
  seq.reference = kin.kinetics;

  SurrogateTrainingOptions opt;
  opt.degree = c.degree;
  opt.ridge = c.ridge;
  opt.weights = parse_loss_weights(c.loss_weights);
  if (c.optimizer == "adam") opt.optimizer = Optimizer::adam;
  else if (c.optimizer == "gd") opt.optimizer = Optimizer::gradient_descent;
  else throw ValidationError("--optimizer must be adam or gd");
  opt.learning_rate = c.learning_rate;
  opt.steps = c.steps;
  opt.horizon = c.window;
  opt.contact = contact_mode(c.contact);
  opt.integrator = integrator(c);
  auto fit = fit_surrogate_id(model, {seq}, opt);

  io::write_text(c.out, fit.surrogate.serialize() + "\n");
  std::filesystem::path report(c.out);
  report.replace_extension();
  const std::string report_path = report.string() + "_report.csv";
  io::write_training_report(report_path, fit.report);
  emit_plot(c, report_path, "training " + model.name());
  return 0;
}

std::string one_line(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out;
}

int fail(int code, const char* kind, const std::string& message) {
  std::cerr << "msk: error code=" << code << " kind=" << kind << " message=\"" << one_line(message) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msk: musculoskeletal simulation, inverse kinematics, optimal control and roundtrip checks"};
  app.require_subcommand(1);
  RunConfig c;

  auto common = [&](CLI::App* s) {
    s->add_option("--model", c.model, "Model file (JSON)");
    s->add_option("--input", c.input, "Input file");
    s->add_option("--out", c.out, "Output file");
    s->add_flag("--emit-gnuplot", c.gnuplot, "Write a gnuplot script next to every CSV");
  };
  auto dynamics_opts = [&](CLI::App* s) {
    s->add_option("--method", c.method, "rk4 | rk45 | euler")->check(CLI::IsMember({"rk4", "rk45", "euler"}));
    s->add_option("--contact", c.contact, "automatic | none");
  };

  auto* sim = app.add_subcommand("simulate", "Forward-dynamics rollout to a trajectory CSV");
  common(sim);
  dynamics_opts(sim);
  sim->add_option("--dt", c.dt, "Recording step, s");
  sim->add_option("--horizon", c.horizon, "Duration, s");
  sim->add_option("--interp", c.interpolation, "Control interpolation: zoh | linear");
  sim->add_option("--initial", c.initial, "Trajectory CSV whose first row is the initial state");
  sim->add_option("--q0", c.q0, "Initial positions (all coordinates)")->delimiter(',');
  sim->add_option("--qdot0", c.qdot0, "Initial velocities (all coordinates)")->delimiter(',');
  sim->add_option("--seed", c.seed, "Unused; accepted for uniform invocations");

  auto* mk = app.add_subcommand("markers", "Synthesize marker positions from a trajectory CSV");
  common(mk);
  mk->add_option("--noise", c.noise, "Gaussian noise standard deviation, m");
  mk->add_option("--seed", c.seed, "Noise RNG seed");

  auto* ik = app.add_subcommand("ik", "Inverse kinematics from a marker CSV to a states CSV");
  common(ik);
  ik->add_option("--cutoff", c.cutoff, "Low-pass cutoff before differentiation, Hz (0 = none)");

  auto* id = app.add_subcommand("id", "Inverse dynamics from a trajectory CSV to a kinetics CSV");
  common(id);
  id->add_option("--contact", c.contact, "automatic | none");

  auto* ocp = app.add_subcommand("ocp", "Optimal-control fit of reference kinematics");
  common(ocp);
  ocp->add_option("--grid", c.grid, "Number of collocation knots");
  ocp->add_option("--weights", c.weights, "w1,w2,w3,w4 (effort, q, qdot, qddot)");

  auto* rt = app.add_subcommand("roundtrip", "Inverse-then-forward dynamics consistency report");
  common(rt);
  dynamics_opts(rt);

  auto* tr = app.add_subcommand("train", "Fit a polynomial inverse-dynamics surrogate");
  common(tr);
  dynamics_opts(tr);
  tr->add_option("--kinetics", c.kinetics, "Reference kinetics CSV aligned with --input");
  tr->add_option("--degree", c.degree, "Polynomial degree (1 or 2)");
  tr->add_option("--steps", c.steps, "Optimizer steps");
  tr->add_option("--lr", c.learning_rate, "Learning rate");
  tr->add_option("--ridge", c.ridge, "Ridge penalty");
  tr->add_option("--window", c.window, "Rollout steps per consistency window");
  tr->add_option("--loss-weights", c.loss_weights, "w_lambda,w_tau,w_q,w_J");
  tr->add_option("--optimizer", c.optimizer, "adam | gd");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "simulate") return cmd_simulate(c);
    if (cmd == "markers") return cmd_markers(c);
    if (cmd == "ik") return cmd_ik(c);
    if (cmd == "id") return cmd_id(c);
    if (cmd == "ocp") return cmd_ocp(c);
    if (cmd == "roundtrip") return cmd_roundtrip(c);
    if (cmd == "train") return cmd_train(c);
  } catch (const ParseError& e) {
    return fail(2, "io", e.what());
  } catch (const ValidationError& e) {
    return fail(2, "validation", e.what());
  } catch (const NumericalError& e) {
    return fail(1, "numerical", e.what());
  } catch (const RunFailure& e) {
    return fail(1, "numerical", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
  return fail(2, "usage", "unknown command '" + cmd + "'");
}
