#pragma once

// CSV and structured-text files exchanged by the command-line pipelines.
//
// Every CSV written here starts with "# schema_version=1", then a header
// row, then one row per frame. Numbers use %.17g; an empty cell is a
// missing value (read back as NaN). Column layouts:
//
//   trajectory  time, <coord>..., <coord>_dot..., [<coord>_ddot...]
//   kinetics    time, tau_<rot coord>..., lambda_x, lambda_y, lambda_z,
//               [root_<root coord>...]
//   markers     time, <marker>_x, <marker>_y, <marker>_z, ...
//   controls    time, tau_<coord>...   (any subset; absent columns are 0)
//
// Coordinate names are SkeletonModel::coordinate_names() (T_x .. R_z, then
// <joint>_<k>).

#include <string>
#include <vector>

#include "msk/consistency.hpp"
#include "msk/ik.hpp"
#include "msk/integrator.hpp"
#include "msk/ocp.hpp"

namespace msk::io {

inline constexpr int kSchemaVersion = 1;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  ///< NaN marks an empty cell

  /// Column index or -1.
  int find(const std::string& name) const;
  std::vector<double> column(int index) const;
};

/// Lines starting with '#' are comments; a "# schema_version=N" comment
/// with N != 1 is rejected. Throws ParseError naming the path and line.
Table read_table(const std::string& path);
void write_table(const std::string& path, const Table& table);

/// %.17g, or an empty string for NaN.
std::string format_number(double value);

std::vector<std::string> trajectory_columns(const SkeletonModel& model, bool accelerations);
/// Accelerations are included when present for every frame.
Table trajectory_table(const SkeletonModel& model, const Trajectory& trajectory);
void write_trajectory(const std::string& path, const SkeletonModel& model, const Trajectory& trajectory);
/// Positions are required. Missing velocity or acceleration columns are
/// filled by finite differences (uniform grid, >= 3 frames).
Trajectory read_trajectory(const std::string& path, const SkeletonModel& model);

void write_kinetics(const std::string& path, const SkeletonModel& model, const std::vector<double>& times,
                    const std::vector<KineticState>& kinetics, const std::vector<VectorXd>& root_residuals = {});
struct KineticsFile {
  std::vector<double> times;
  std::vector<KineticState> kinetics;
};
KineticsFile read_kinetics(const std::string& path, const SkeletonModel& model);

void write_markers(const std::string& path, const SkeletonModel& model, const std::vector<MarkerFrame>& frames);
/// Markers of the model without columns in the file are marked missing in
/// every frame; columns naming unknown markers are ignored.
std::vector<MarkerFrame> read_markers(const std::string& path, const SkeletonModel& model);

/// Generalized-force knots; unknown tau_ columns are a ParseError.
ControlTrajectory read_controls(const std::string& path, const SkeletonModel& model);
void write_controls(const std::string& path, const SkeletonModel& model, const ControlTrajectory& controls);

/// time, q_residual, joint_residual, tau_residual, lambda_residual, root_residual
void write_roundtrip_report(const std::string& path, const RoundtripReport& report);
/// step, kinetic_lambda, kinetic_tau, consistency_q, consistency_J, ridge, total
void write_training_report(const std::string& path, const TrainingReport& report);

/// JSON problem description:
///   {"model": PATH, "reference": CSV, "weights": [w1, w2, w3, w4],
///    "grid": {"knots": N, "start": t0, "end": t1}, "contact": "automatic"|"none"}
/// Relative paths resolve against the problem file's directory. Only
/// "model" and "reference" are required; the grid defaults to the reference
/// frames and the reference is linearly interpolated onto it.
struct OcpProblemFile {
  std::string model_path;
  std::string reference_path;
  OcpWeights weights;
  int knots = 0;  ///< 0 = one knot per reference frame
  double start = 0.0, end = 0.0;
  bool has_interval = false;
  ContactInput::Mode contact = ContactInput::Mode::automatic;
};
OcpProblemFile read_ocp_problem_file(const std::string& path);
OcpProblem build_ocp_problem(const SkeletonModel& model, const OcpProblemFile& file, const Trajectory& reference);

/// Writes <stem>.csv (states with accelerations), <stem>_controls.csv
/// (time, u_<muscle>..., u_<actuated coord>...), <stem>_kinetics.csv and
/// <stem>_summary.csv for an output path <stem>.csv. Returns the paths.
std::vector<std::string> write_ocp_solution(const std::string& path, const OcpProblem& problem,
                                            const OcpSolution& solution);

/// Writes <stem>.gp next to a CSV: every column against time.
std::string write_gnuplot(const std::string& csv_path, const std::string& title);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace msk::io
