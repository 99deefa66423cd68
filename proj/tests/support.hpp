#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "msk/model.hpp"

namespace msk::test {

inline std::string fixture(const std::string& name) { return std::string(MSK_FIXTURE_DIR) + "/" + name; }

inline const SkeletonModel& full_body() {
  static const SkeletonModel m = load_model(fixture("full_body.json"));
  return m;
}
inline const SkeletonModel& pendulum() {
  static const SkeletonModel m = load_model(fixture("pendulum.json"));
  return m;
}
inline const SkeletonModel& two_link() {
  static const SkeletonModel m = load_model(fixture("two_link.json"));
  return m;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, -scale, scale);
  return v;
}

/// Random in-limit configuration; root rotation with |R| < pi.
inline VectorXd random_q(const SkeletonModel& model, std::mt19937_64& rng, double shrink = 1.0) {
  VectorXd q(model.dof());
  for (int i = 0; i < 3; ++i) q(i) = uniform(rng, -1.0, 1.0);
  Vector3d axis = random_vector(rng, 3, 1.0);
  if (axis.norm() < 1e-3) axis = Vector3d::UnitY();
  q.segment<3>(3) = axis.normalized() * uniform(rng, 0.0, 3.0);
  for (int i = 6; i < model.dof(); ++i) {
    const double lo = std::max(model.lower_limits()(i), -3.0);
    const double hi = std::min(model.upper_limits()(i), 3.0);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo) * shrink;
    q(i) = uniform(rng, mid - half, mid + half);
  }
  if (model.root_locked()) q.head(6).setZero();
  return q;
}

inline GeneralizedState random_state(const SkeletonModel& model, std::mt19937_64& rng, double speed = 1.0) {
  GeneralizedState s{random_q(model, rng), random_vector(rng, model.dof(), speed)};
  if (model.root_locked()) s.qdot.head(6).setZero();
  return s;
}

inline double rel_err(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

/// Fresh empty directory under the system temp path.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / ("msk_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace msk::test
