#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "msk/io.hpp"
#include "msk/kinematics.hpp"
#include "support.hpp"

using namespace msk;
using namespace msk::test;

namespace {

std::string first_line(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string header_line(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  return line;
}

void write_raw(const std::string& path, const std::string& text) { io::write_text(path, text); }

}  // namespace

TEST_SUITE("io") {

TEST_CASE("table: values survive a write/read cycle bit for bit") {
  const auto dir = scratch_dir("io_table");
  std::mt19937_64 rng(3);
  io::Table t;
  t.columns = {"time", "a", "b"};
  for (int r = 0; r < 50; ++r)
    t.rows.push_back({r * 0.1, uniform(rng, -1e3, 1e3) * std::pow(10.0, r % 7 - 3), uniform(rng, -1, 1) * 1e-300});
  t.rows[7][1] = std::numeric_limits<double>::quiet_NaN();
  io::write_table(dir + "/t.csv", t);
  CHECK(first_line(dir + "/t.csv") == "# schema_version=1");
  CHECK(header_line(dir + "/t.csv") == "time,a,b");
  auto back = io::read_table(dir + "/t.csv");
  REQUIRE(back.rows.size() == t.rows.size());
  CHECK(std::isnan(back.rows[7][1]));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (int c = 0; c < 3; ++c)
      if (!(r == 7 && c == 1)) CHECK(back.rows[r][c] == t.rows[r][c]);
}

TEST_CASE("table: malformed files name the path and line") {
  const auto dir = scratch_dir("io_bad");
  write_raw(dir + "/v2.csv", "# schema_version=2\ntime\n0\n");
  CHECK_THROWS_AS(io::read_table(dir + "/v2.csv"), ParseError);
  write_raw(dir + "/num.csv", "# schema_version=1\ntime,a\n0,1\n1,abc\n");
  try {
    io::read_table(dir + "/num.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string m = e.what();
    CHECK(m.find("num.csv:4") != std::string::npos);
    CHECK(m.find("abc") != std::string::npos);
  }
  write_raw(dir + "/width.csv", "time,a\n0,1,2\n");
  CHECK_THROWS_AS(io::read_table(dir + "/width.csv"), ParseError);
  write_raw(dir + "/empty.csv", "# schema_version=1\n");
  CHECK_THROWS_AS(io::read_table(dir + "/empty.csv"), ParseError);
  try {
    io::read_table(dir + "/absent.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("absent.csv") != std::string::npos);
  }
}

TEST_CASE("trajectory: column order and exact round trip") {
  const auto& model = full_body();
  const auto dir = scratch_dir("io_traj");
  std::mt19937_64 rng(11);
  Trajectory traj;
  for (int k = 0; k < 5; ++k) {
    traj.times.push_back(0.01 * k);
    traj.states.push_back(random_state(model, rng));
    traj.qddot.push_back(random_vector(rng, model.dof(), 5.0));
  }
  io::write_trajectory(dir + "/traj.csv", model, traj);
  const auto cols = io::trajectory_columns(model, true);
  REQUIRE(static_cast<int>(cols.size()) == 1 + 3 * model.dof());
  CHECK(cols[0] == "time");
  CHECK(cols[1] == "T_x");
  CHECK(cols[4] == "R_x");
  CHECK(cols[6] == "R_z");
  CHECK(cols[7] == model.coordinate_names()[6]);
  CHECK(cols[1 + model.dof()] == "T_x_dot");
  CHECK(cols[1 + 2 * model.dof()] == "T_x_ddot");

  auto back = io::read_trajectory(dir + "/traj.csv", model);
  REQUIRE(back.size() == traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CHECK(back.times[k] == traj.times[k]);
    CHECK(back.states[k].q == traj.states[k].q);
    CHECK(back.states[k].qdot == traj.states[k].qdot);
    CHECK(back.qddot[k] == traj.qddot[k]);
  }
}

TEST_CASE("trajectory: positions only are differentiated") {
  const auto& model = pendulum();
  const auto dir = scratch_dir("io_posonly");
  const double dt = 1e-3;
  std::string text = "# schema_version=1\ntime";
  for (const auto& n : model.coordinate_names()) text += "," + n;
  text += "\n";
  for (int k = 0; k <= 200; ++k) {
    const double t = k * dt;
    text += io::format_number(t) + ",0,0,0,0,0,0," + io::format_number(std::sin(2 * t)) + "\n";
  }
  write_raw(dir + "/pos.csv", text);
  auto traj = io::read_trajectory(dir + "/pos.csv", model);
  double ev = 0, ea = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    ev = std::max(ev, std::abs(traj.states[k].qdot(6) - 2 * std::cos(2 * t)));
    ea = std::max(ea, std::abs(traj.qddot[k](6) + 4 * std::sin(2 * t)));
  }
  // Central-difference truncation h^2 |q'''| / 6 with |q'''| <= 8.
  CHECK(ev < 1.05 * dt * dt * 8.0 / 6.0);
  CHECK(ea < 1e-4);
}

TEST_CASE("trajectory: missing coordinates and bad values are rejected") {
  const auto& model = two_link();
  const auto dir = scratch_dir("io_traj_bad");
  write_raw(dir + "/a.csv", "time,T_x\n0,0\n");
  CHECK_THROWS_AS(io::read_trajectory(dir + "/a.csv", model), ParseError);
  Trajectory t;
  t.times = {0.0, 0.0};
  t.states = {GeneralizedState::zero(model), GeneralizedState::zero(model)};
  io::write_trajectory(dir + "/b.csv", model, t);
  CHECK_THROWS_AS(io::read_trajectory(dir + "/b.csv", model), ParseError);  // time not increasing
}

TEST_CASE("kinetics: columns and round trip") {
  const auto& model = full_body();
  const auto dir = scratch_dir("io_kin");
  std::mt19937_64 rng(5);
  std::vector<double> times{0.0, 0.5};
  std::vector<KineticState> kin(2);
  std::vector<VectorXd> roots;
  for (auto& k : kin) {
    k.tau = random_vector(rng, model.rot_dof(), 50);
    k.lambda_total = random_vector(rng, 3, 500);
    roots.push_back(random_vector(rng, 6, 1));
  }
  io::write_kinetics(dir + "/k.csv", model, times, kin, roots);
  auto table = io::read_table(dir + "/k.csv");
  CHECK(table.columns.front() == "time");
  CHECK(table.columns[1] == "tau_" + model.coordinate_names()[6]);
  CHECK(table.columns[1 + model.rot_dof()] == "lambda_x");
  CHECK(table.columns[3 + model.rot_dof()] == "lambda_z");
  CHECK(table.columns.back() == "root_R_z");
  auto back = io::read_kinetics(dir + "/k.csv", model);
  REQUIRE(back.kinetics.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(back.kinetics[i].tau == kin[i].tau);
    CHECK(back.kinetics[i].lambda_total == kin[i].lambda_total);
  }
}

TEST_CASE("markers: empty cells mark missing markers") {
  const auto& model = two_link();
  const auto dir = scratch_dir("io_markers");
  MarkerFrame f;
  f.time = 0.0;
  f.positions = marker_positions(model, GeneralizedState::zero(model));
  f.present.assign(model.marker_count(), true);
  f.present[1] = false;
  io::write_markers(dir + "/m.csv", model, {f});
  const auto header = header_line(dir + "/m.csv");
  CHECK(header.rfind("time," + model.markers()[0].name + "_x," + model.markers()[0].name + "_y", 0) == 0);
  auto back = io::read_markers(dir + "/m.csv", model);
  REQUIRE(back.size() == 1);
  CHECK_FALSE(back[0].present[1]);
  for (int m = 0; m < model.marker_count(); ++m)
    if (m != 1) {
      CHECK(back[0].present[m]);
      CHECK(back[0].positions[m] == f.positions[m]);
    }

  // Unknown columns are ignored; absent model markers are missing.
  const auto& n0 = model.markers()[0].name;
  write_raw(dir + "/sub.csv", "time,extra_x,extra_y,extra_z," + n0 + "_x," + n0 + "_y," + n0 + "_z\n0,1,2,3,4,5,6\n");
  auto sub = io::read_markers(dir + "/sub.csv", model);
  CHECK(sub[0].present[0]);
  CHECK(sub[0].positions[0] == Vector3d(4, 5, 6));
  CHECK_FALSE(sub[0].present[2]);

  write_raw(dir + "/part.csv", "time," + n0 + "_x," + n0 + "_y," + n0 + "_z\n0,1,,3\n");
  CHECK_THROWS_AS(io::read_markers(dir + "/part.csv", model), ParseError);
}

TEST_CASE("controls: subset columns, zero elsewhere") {
  const auto& model = two_link();
  const auto dir = scratch_dir("io_controls");
  write_raw(dir + "/c.csv", "# schema_version=1\ntime,tau_elbow_0\n0,1.5\n0.5,-2\n");
  auto c = io::read_controls(dir + "/c.csv", model);
  REQUIRE(c.tau.size() == 2);
  CHECK(c.tau[0](7) == 1.5);
  CHECK(c.tau[1](7) == -2.0);
  CHECK(c.tau[0].head(7).isZero(0.0));
  write_raw(dir + "/bad.csv", "time,tau_knee_0\n0,1\n");
  CHECK_THROWS_AS(io::read_controls(dir + "/bad.csv", model), ParseError);

  io::write_controls(dir + "/w.csv", model, c);
  auto again = io::read_controls(dir + "/w.csv", model);
  CHECK(again.tau[1] == c.tau[1]);
}

TEST_CASE("ocp problem file: paths, defaults and resampling") {
  const auto dir = scratch_dir("io_ocp");
  const auto& model = pendulum();
  // Reference linear in time, so interpolation onto any grid is exact.
  Trajectory ref;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    GeneralizedState s = GeneralizedState::zero(model);
    s.q(6) = 0.2 + 0.5 * t;
    s.qdot(6) = 0.5;
    ref.times.push_back(t);
    ref.states.push_back(s);
    ref.qddot.push_back(VectorXd::Zero(model.dof()));
  }
  io::write_trajectory(dir + "/ref.csv", model, ref);
  write_raw(dir + "/p.json", R"({"model": ")" + fixture("pendulum.json") +
                                 R"(", "reference": "ref.csv", "weights": [1, 2, 3, 4],
                                   "grid": {"knots": 4, "start": 0.25, "end": 0.85}, "contact": "none"})");
  auto file = io::read_ocp_problem_file(dir + "/p.json");
  CHECK(file.reference_path == (std::filesystem::path(dir) / "ref.csv").string());
  CHECK(file.weights.qddot == 4.0);
  CHECK(file.contact == ContactInput::Mode::none);
  auto p = io::build_ocp_problem(model, file, io::read_trajectory(file.reference_path, model));
  REQUIRE(p.knots() == 4);
  CHECK(p.times.front() == doctest::Approx(0.25));
  CHECK(p.times.back() == doctest::Approx(0.85));
  for (int k = 0; k < 4; ++k) CHECK(p.q_ref[k](6) == doctest::Approx(0.2 + 0.5 * p.times[k]).epsilon(1e-14));
  CHECK_NOTHROW(p.validate());

  write_raw(dir + "/defaults.json", R"({"model": "m.json", "reference": "/abs/ref.csv"})");
  auto d = io::read_ocp_problem_file(dir + "/defaults.json");
  CHECK(d.knots == 0);
  CHECK(d.reference_path == "/abs/ref.csv");
  CHECK(d.contact == ContactInput::Mode::automatic);

  write_raw(dir + "/w3.json", R"({"model": "m.json", "reference": "r.csv", "weights": [1, 2, 3]})");
  CHECK_THROWS_AS(io::read_ocp_problem_file(dir + "/w3.json"), ParseError);
  write_raw(dir + "/nomodel.json", R"({"reference": "r.csv"})");
  CHECK_THROWS_AS(io::read_ocp_problem_file(dir + "/nomodel.json"), ParseError);
  write_raw(dir + "/broken.json", "{");
  CHECK_THROWS_AS(io::read_ocp_problem_file(dir + "/broken.json"), ParseError);

  io::OcpProblemFile wide = file;
  wide.end = 2.0;
  CHECK_THROWS_AS(io::build_ocp_problem(model, wide, ref), ValidationError);
}

TEST_CASE("reports and plot scripts carry the schema line") {
  const auto dir = scratch_dir("io_reports");
  TrainingReport tr;
  tr.step = {0, 1};
  tr.kinetic_lambda = {1, 0.5};
  tr.kinetic_tau = {2, 1};
  tr.consistency_q = {3, 1.5};
  tr.consistency_J = {0, 0};
  tr.ridge = {1e-6, 1e-6};
  tr.total = {6.000001, 3.000001};
  io::write_training_report(dir + "/train.csv", tr);
  CHECK(first_line(dir + "/train.csv") == "# schema_version=1");
  CHECK(header_line(dir + "/train.csv") == "step,kinetic_lambda,kinetic_tau,consistency_q,consistency_J,ridge,total");

  RoundtripReport rr;
  rr.times = {0.0, 0.1};
  rr.q_residual = {0.0, 1e-9};
  rr.joint_residual = {0.0, 2e-9};
  rr.tau_residual = {0.0, 0.0};
  rr.lambda_residual = {0.0, 0.0};
  rr.root_residual = {0.0, 0.0};
  io::write_roundtrip_report(dir + "/rt.csv", rr);
  auto t = io::read_table(dir + "/rt.csv");
  CHECK(t.columns[1] == "q_residual");
  CHECK(t.rows[1][1] == 1e-9);

  const auto gp = io::write_gnuplot(dir + "/rt.csv", "roundtrip");
  CHECK(gp == dir + "/rt.gp");
  const auto script = io::read_text(gp);
  CHECK(script.find("'rt.csv'") != std::string::npos);
  CHECK(script.find("i=2:6") != std::string::npos);
}

}  // TEST_SUITE
