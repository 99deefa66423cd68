#include "msk/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "msk/dynamics.hpp"

namespace msk::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& cell, double& value) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, value);
  return ec == std::errc() && ptr == e;
}

std::vector<std::string> names_with(const std::vector<std::string>& names, const std::string& prefix,
                                    const std::string& suffix) {
  std::vector<std::string> out;
  for (const auto& n : names) out.push_back(prefix + n + suffix);
  return out;
}

std::vector<std::string> rotational_names(const SkeletonModel& model) {
  const auto& all = model.coordinate_names();
  return {all.begin() + 6, all.end()};
}

int require(const Table& t, const std::string& name, const std::string& path) {
  int i = t.find(name);
  if (i < 0) throw ParseError(path + ": missing column '" + name + "'");
  return i;
}

/// Columns for `names`, all present (returns indices) or all absent (empty).
std::vector<int> column_block(const Table& t, const std::vector<std::string>& names, const std::string& path) {
  std::vector<int> idx;
  for (const auto& n : names) idx.push_back(t.find(n));
  int found = 0;
  for (int i : idx) found += i >= 0;
  if (found == 0) return {};
  if (found != static_cast<int>(names.size())) {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (idx[k] < 0) throw ParseError(path + ": missing column '" + names[k] + "'");
  }
  return idx;
}

VectorXd gather(const std::vector<double>& row, const std::vector<int>& idx, const std::string& path, int line) {
  VectorXd v(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    v(k) = row[idx[k]];
    if (!std::isfinite(v(k))) parse_fail(path, line, "empty or non-finite value");
  }
  return v;
}

std::vector<double> times_of(const Table& t, const std::string& path) {
  int c = require(t, "time", path);
  std::vector<double> times;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    double v = t.rows[r][c];
    if (!std::isfinite(v)) throw ParseError(path + ": row " + std::to_string(r + 1) + ": missing time");
    if (!times.empty() && !(v > times.back()))
      throw ParseError(path + ": row " + std::to_string(r + 1) + ": time not increasing");
    times.push_back(v);
  }
  return times;
}

std::string stem_path(const std::string& path) {
  fs::path p(path);
  if (p.extension() == ".csv") p.replace_extension();
  return p.string();
}

}  // namespace

int Table::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> Table::column(int index) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(index));
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ParseError("write failed for '" + path + "'");
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  Table t;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      auto pos = s.find("schema_version=");
      if (pos != std::string::npos) {
        std::string v = trim(s.substr(pos + 15));
        if (v != std::to_string(kSchemaVersion)) parse_fail(path, lineno, "unsupported schema_version " + v);
      }
      continue;
    }
    auto cells = split(s);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      parse_fail(path, lineno,
                 "expected " + std::to_string(t.columns.size()) + " cells, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size(), kNaN);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].empty()) continue;
      if (!parse_double(cells[i], row[i])) parse_fail(path, lineno, "bad number '" + cells[i] + "'");
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw ParseError(path + ": no header row");
  return t;
}

void write_table(const std::string& path, const Table& table) {
  std::string out = "# schema_version=" + std::to_string(kSchemaVersion) + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw DimensionError("write_table: row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += "\n";
  }
  write_text(path, out);
}

// --- trajectories -----------------------------------------------------------

std::vector<std::string> trajectory_columns(const SkeletonModel& model, bool accelerations) {
  const auto& n = model.coordinate_names();
  std::vector<std::string> cols{"time"};
  cols.insert(cols.end(), n.begin(), n.end());
  for (const auto& s : names_with(n, "", "_dot")) cols.push_back(s);
  if (accelerations)
    for (const auto& s : names_with(n, "", "_ddot")) cols.push_back(s);
  return cols;
}

Table trajectory_table(const SkeletonModel& model, const Trajectory& trajectory) {
  const bool acc = trajectory.qddot.size() == trajectory.states.size() && !trajectory.states.empty();
  Table t;
  t.columns = trajectory_columns(model, acc);
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const auto& s = trajectory.states[k];
    check_dimensions(model, s);
    std::vector<double> row{trajectory.times[k]};
    row.insert(row.end(), s.q.data(), s.q.data() + s.q.size());
    row.insert(row.end(), s.qdot.data(), s.qdot.data() + s.qdot.size());
    if (acc) row.insert(row.end(), trajectory.qddot[k].data(), trajectory.qddot[k].data() + trajectory.qddot[k].size());
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_trajectory(const std::string& path, const SkeletonModel& model, const Trajectory& trajectory) {
  write_table(path, trajectory_table(model, trajectory));
}

Trajectory read_trajectory(const std::string& path, const SkeletonModel& model) {
  Table t = read_table(path);
  const auto& n = model.coordinate_names();
  Trajectory traj;
  traj.times = times_of(t, path);
  auto qi = column_block(t, n, path);
  if (qi.empty()) throw ParseError(path + ": missing column '" + n.front() + "'");
  auto vi = column_block(t, names_with(n, "", "_dot"), path);
  auto ai = column_block(t, names_with(n, "", "_ddot"), path);

  std::vector<VectorXd> q;
  for (std::size_t r = 0; r < t.rows.size(); ++r) q.push_back(gather(t.rows[r], qi, path, static_cast<int>(r + 1)));

  DifferentiatedTrajectory diff;
  if (vi.empty() || ai.empty()) {
    if (q.size() < 3) throw ParseError(path + ": need >= 3 frames to differentiate missing velocity columns");
    const double dt = traj.times[1] - traj.times[0];
    for (std::size_t k = 1; k < traj.times.size(); ++k)
      if (std::abs(traj.times[k] - traj.times[k - 1] - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
        throw ParseError(path + ": non-uniform time grid, cannot differentiate");
    diff = differentiate_trajectory(q, dt);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    GeneralizedState s;
    s.q = q[r];
    s.qdot = vi.empty() ? diff.qdot[r] : gather(t.rows[r], vi, path, static_cast<int>(r + 1));
    traj.states.push_back(std::move(s));
    traj.qddot.push_back(ai.empty() ? diff.qddot[r] : gather(t.rows[r], ai, path, static_cast<int>(r + 1)));
  }
  return traj;
}

// --- kinetics ---------------------------------------------------------------

void write_kinetics(const std::string& path, const SkeletonModel& model, const std::vector<double>& times,
                    const std::vector<KineticState>& kinetics, const std::vector<VectorXd>& root_residuals) {
  if (times.size() != kinetics.size()) throw DimensionError("write_kinetics: times/kinetics length mismatch");
  const bool roots = !root_residuals.empty();
  if (roots && root_residuals.size() != times.size())
    throw DimensionError("write_kinetics: root residual length mismatch");
  Table t;
  t.columns = {"time"};
  for (const auto& s : names_with(rotational_names(model), "tau_", "")) t.columns.push_back(s);
  for (const char* s : {"lambda_x", "lambda_y", "lambda_z"}) t.columns.push_back(s);
  if (roots) {
    const auto& n = model.coordinate_names();
    for (int i = 0; i < 6; ++i) t.columns.push_back("root_" + n[i]);
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto& ks = kinetics[k];
    if (ks.tau.size() != model.rot_dof()) throw DimensionError("write_kinetics: tau size mismatch");
    std::vector<double> row{times[k]};
    row.insert(row.end(), ks.tau.data(), ks.tau.data() + ks.tau.size());
    row.insert(row.end(), ks.lambda_total.data(), ks.lambda_total.data() + 3);
    if (roots) {
      if (root_residuals[k].size() != 6) throw DimensionError("write_kinetics: root residual must have 6 entries");
      row.insert(row.end(), root_residuals[k].data(), root_residuals[k].data() + 6);
    }
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

KineticsFile read_kinetics(const std::string& path, const SkeletonModel& model) {
  Table t = read_table(path);
  KineticsFile out;
  out.times = times_of(t, path);
  auto ti = column_block(t, names_with(rotational_names(model), "tau_", ""), path);
  if (ti.empty() && model.rot_dof() > 0) throw ParseError(path + ": missing tau columns");
  std::vector<int> li;
  for (const char* s : {"lambda_x", "lambda_y", "lambda_z"}) li.push_back(require(t, s, path));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    KineticState ks;
    ks.tau = gather(t.rows[r], ti, path, static_cast<int>(r + 1));
    ks.lambda_total = gather(t.rows[r], li, path, static_cast<int>(r + 1));
    out.kinetics.push_back(std::move(ks));
  }
  return out;
}

// --- markers ----------------------------------------------------------------

void write_markers(const std::string& path, const SkeletonModel& model, const std::vector<MarkerFrame>& frames) {
  Table t;
  t.columns = {"time"};
  for (const auto& m : model.markers())
    for (const char* ax : {"_x", "_y", "_z"}) t.columns.push_back(m.name + ax);
  for (const auto& f : frames) {
    if (static_cast<int>(f.positions.size()) != model.marker_count())
      throw DimensionError("write_markers: frame has " + std::to_string(f.positions.size()) + " markers, model has " +
                           std::to_string(model.marker_count()));
    std::vector<double> row{f.time};
    for (int m = 0; m < model.marker_count(); ++m) {
      const bool present = f.present.empty() || f.present[m];
      for (int a = 0; a < 3; ++a) row.push_back(present ? f.positions[m](a) : kNaN);
    }
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

std::vector<MarkerFrame> read_markers(const std::string& path, const SkeletonModel& model) {
  Table t = read_table(path);
  auto times = times_of(t, path);
  const int M = model.marker_count();
  std::vector<std::array<int, 3>> cols(M);
  for (int m = 0; m < M; ++m) {
    const auto& name = model.markers()[m].name;
    int found = 0;
    for (int a = 0; a < 3; ++a) {
      cols[m][a] = t.find(name + std::string("_") + "xyz"[a]);
      found += cols[m][a] >= 0;
    }
    if (found != 0 && found != 3) throw ParseError(path + ": incomplete columns for marker '" + name + "'");
  }
  std::vector<MarkerFrame> frames;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    MarkerFrame f;
    f.time = times[r];
    f.positions.assign(M, Vector3d::Zero());
    f.present.assign(M, false);
    for (int m = 0; m < M; ++m) {
      if (cols[m][0] < 0) continue;
      Vector3d p;
      int finite = 0;
      for (int a = 0; a < 3; ++a) {
        p(a) = t.rows[r][cols[m][a]];
        finite += std::isfinite(p(a));
      }
      if (finite == 3) {
        f.positions[m] = p;
        f.present[m] = true;
      } else if (finite != 0) {
        parse_fail(path, static_cast<int>(r + 1),
                   "marker '" + model.markers()[m].name + "' has a partially empty position");
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

// --- controls ---------------------------------------------------------------

ControlTrajectory read_controls(const std::string& path, const SkeletonModel& model) {
  Table t = read_table(path);
  ControlTrajectory c;
  c.times = times_of(t, path);
  const auto& n = model.coordinate_names();
  std::vector<std::pair<int, int>> map;  // column -> coordinate
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    const auto& col = t.columns[i];
    if (col == "time") continue;
    if (col.rfind("tau_", 0) != 0) throw ParseError(path + ": unexpected column '" + col + "'");
    auto it = std::find(n.begin(), n.end(), col.substr(4));
    if (it == n.end()) throw ParseError(path + ": unknown coordinate in column '" + col + "'");
    map.emplace_back(static_cast<int>(i), static_cast<int>(it - n.begin()));
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    VectorXd tau = VectorXd::Zero(model.dof());
    for (auto [col, idx] : map) {
      double v = t.rows[r][col];
      if (!std::isfinite(v)) parse_fail(path, static_cast<int>(r + 1), "empty or non-finite value");
      tau(idx) = v;
    }
    c.tau.push_back(std::move(tau));
  }
  if (c.times.empty()) throw ParseError(path + ": no control rows");
  return c;
}

void write_controls(const std::string& path, const SkeletonModel& model, const ControlTrajectory& controls) {
  Table t;
  t.columns = {"time"};
  for (const auto& s : names_with(model.coordinate_names(), "tau_", "")) t.columns.push_back(s);
  for (std::size_t k = 0; k < controls.times.size(); ++k) {
    std::vector<double> row{controls.times[k]};
    row.insert(row.end(), controls.tau[k].data(), controls.tau[k].data() + controls.tau[k].size());
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

// --- reports ----------------------------------------------------------------

void write_roundtrip_report(const std::string& path, const RoundtripReport& report) {
  Table t;
  t.columns = {"time", "q_residual", "joint_residual", "tau_residual", "lambda_residual", "root_residual"};
  for (std::size_t k = 0; k < report.q_residual.size(); ++k) {
    auto at = [&](const std::vector<double>& v) { return k < v.size() ? v[k] : kNaN; };
    t.rows.push_back({report.times[k], report.q_residual[k], at(report.joint_residual), at(report.tau_residual),
                      at(report.lambda_residual), at(report.root_residual)});
  }
  write_table(path, t);
}

void write_training_report(const std::string& path, const TrainingReport& report) {
  Table t;
  t.columns = {"step", "kinetic_lambda", "kinetic_tau", "consistency_q", "consistency_J", "ridge", "total"};
  for (std::size_t k = 0; k < report.step.size(); ++k)
    t.rows.push_back({static_cast<double>(report.step[k]), report.kinetic_lambda[k], report.kinetic_tau[k],
                      report.consistency_q[k], report.consistency_J[k], report.ridge[k], report.total[k]});
  write_table(path, t);
}

// --- OCP --------------------------------------------------------------------

OcpProblemFile read_ocp_problem_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  const fs::path dir = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (dir / p).string(); };
  OcpProblemFile f;
  try {
    if (!j.is_object()) throw ParseError(path + ": expected a JSON object");
    if (!j.contains("model") || !j["model"].is_string()) throw ParseError(path + ": missing string field 'model'");
    if (!j.contains("reference") || !j["reference"].is_string())
      throw ParseError(path + ": missing string field 'reference'");
    f.model_path = resolve(j["model"].get<std::string>());
    f.reference_path = resolve(j["reference"].get<std::string>());
    if (j.contains("weights")) {
      auto w = j["weights"].get<std::vector<double>>();
      if (w.size() != 4) throw ParseError(path + ": 'weights' needs 4 entries");
      f.weights = {w[0], w[1], w[2], w[3]};
      for (double v : w)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(path + ": weights must be finite and >= 0");
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      if (g.contains("knots")) f.knots = g["knots"].get<int>();
      if (g.contains("start") || g.contains("end")) {
        f.start = g.at("start").get<double>();
        f.end = g.at("end").get<double>();
        f.has_interval = true;
      }
    }
    if (j.contains("contact")) {
      auto c = j["contact"].get<std::string>();
      if (c == "automatic") f.contact = ContactInput::Mode::automatic;
      else if (c == "none") f.contact = ContactInput::Mode::none;
      else throw ParseError(path + ": contact must be 'automatic' or 'none'");
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (f.knots < 0 || f.knots == 1) throw ValidationError(path + ": grid needs at least 2 knots");
  return f;
}

OcpProblem build_ocp_problem(const SkeletonModel& model, const OcpProblemFile& file, const Trajectory& reference) {
  if (reference.size() < 2) throw ValidationError("ocp: reference needs at least 2 frames");
  const double t0 = file.has_interval ? file.start : reference.times.front();
  const double t1 = file.has_interval ? file.end : reference.times.back();
  if (!(t1 > t0)) throw ValidationError("ocp: grid end must exceed start");
  if (t0 < reference.times.front() - 1e-12 || t1 > reference.times.back() + 1e-12)
    throw ValidationError("ocp: grid extends beyond the reference time span");
  const int N = file.knots > 0 ? file.knots : static_cast<int>(reference.size());

  OcpProblem p(model);
  p.weights = file.weights;
  p.contact = file.contact;
  std::size_t seg = 0;
  for (int k = 0; k < N; ++k) {
    double t = k == N - 1 ? t1 : t0 + (t1 - t0) * k / (N - 1);
    while (seg + 2 < reference.size() && reference.times[seg + 1] <= t) ++seg;
    double ta = reference.times[seg], tb = reference.times[seg + 1];
    double a = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    const auto& A = reference.states[seg];
    const auto& B = reference.states[seg + 1];
    p.times.push_back(t);
    p.q_ref.push_back((1 - a) * A.q + a * B.q);
    p.qdot_ref.push_back((1 - a) * A.qdot + a * B.qdot);
    p.qddot_ref.push_back((1 - a) * reference.qddot[seg] + a * reference.qddot[seg + 1]);
  }
  return p;
}

std::vector<std::string> write_ocp_solution(const std::string& path, const OcpProblem& problem,
                                            const OcpSolution& solution) {
  const auto& model = problem.model;
  const std::string stem = stem_path(path);
  const ContactInput contact =
      problem.contact == ContactInput::Mode::none ? ContactInput::none() : ContactInput::automatic();

  Trajectory traj;
  traj.times = solution.times;
  traj.states = solution.states;
  for (std::size_t k = 0; k < solution.states.size(); ++k)
    traj.qddot.push_back(forward_dynamics(model, solution.states[k], solution.tau[k], contact));
  const std::string states_path = stem + ".csv";
  write_trajectory(states_path, model, traj);

  Table u;
  u.columns = {"time"};
  for (const auto& m : model.muscles()) u.columns.push_back("u_" + m.name);
  for (const auto& [idx, bound] : model.actuated_dofs()) u.columns.push_back("u_" + model.coordinate_names()[idx]);
  for (std::size_t k = 0; k < solution.controls.size(); ++k) {
    std::vector<double> row{solution.times[k]};
    row.insert(row.end(), solution.controls[k].data(), solution.controls[k].data() + solution.controls[k].size());
    u.rows.push_back(std::move(row));
  }
  const std::string controls_path = stem + "_controls.csv";
  write_table(controls_path, u);

  auto ref = extract_reference_kinetics(problem, solution);
  const std::string kinetics_path = stem + "_kinetics.csv";
  write_kinetics(kinetics_path, model, ref.times, ref.kinetics);

  Table s;
  s.columns = {"status",    "objective",        "effort",           "q",
               "qdot",      "qddot",            "max_defect",       "outer_iterations",
               "inner_iterations"};
  double status = solution.status == OcpStatus::converged ? 0 : solution.status == OcpStatus::max_iterations ? 1 : 2;
  s.rows.push_back({status, solution.objective, solution.breakdown.effort, solution.breakdown.q,
                    solution.breakdown.qdot, solution.breakdown.qddot, solution.max_defect,
                    static_cast<double>(solution.outer_iterations), static_cast<double>(solution.inner_iterations)});
  const std::string summary_path = stem + "_summary.csv";
  write_table(summary_path, s);
  return {states_path, controls_path, kinetics_path, summary_path};
}

std::string write_gnuplot(const std::string& csv_path, const std::string& title) {
  Table t = read_table(csv_path);
  const std::string gp = stem_path(csv_path) + ".gp";
  const std::string file = fs::path(csv_path).filename().string();
  std::string out;
  out += "# schema_version=" + std::to_string(kSchemaVersion) + "\n";
  out += "set datafile separator ','\n";
  out += "set key autotitle columnhead outside\n";
  out += "set title '" + title + "'\n";
  out += "set xlabel '" + t.columns.front() + "'\n";
  out += "plot for [i=2:" + std::to_string(t.columns.size()) + "] '" + file + "' using 1:i with lines\n";
  out += "pause mouse close\n";
  write_text(gp, out);
  return gp;
}

}  // namespace msk::io
