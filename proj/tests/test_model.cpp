#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "msk/kinematics.hpp"
#include "msk/rotation.hpp"
#include "support.hpp"

using namespace msk;
using msk::test::fixture;

namespace {

std::string two_link_text() {
  std::ifstream in(fixture("two_link.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelDescription two_link_desc() { return parse_description(two_link_text()); }

template <class F>
std::string validation_message(F&& mutate) {
  ModelDescription d = two_link_desc();
  mutate(d);
  try {
    SkeletonModel m(std::move(d));
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("full-body fixture loads with 24 segments") {
  const auto& m = test::full_body();
  CHECK(m.segment_count() == 24);
  CHECK(m.joint_count() == 23);
  CHECK(m.rot_dof() == 41);
  CHECK(m.dof() == 47);
  CHECK(m.sphere_count() == 6);
  CHECK(m.parent(0) == -1);
  for (int i = 1; i < m.segment_count(); ++i) CHECK(m.parent(i) < i);
  CHECK(m.gravity().isApprox(Vector3d(0, -9.81, 0)));
}

TEST_CASE("tree property: parent links reach the root") {
  const auto& m = test::full_body();
  for (int i = 0; i < m.segment_count(); ++i) {
    int cur = i, steps = 0;
    while (cur != 0 && steps <= m.segment_count()) {
      cur = m.parent(cur);
      ++steps;
    }
    CHECK(cur == 0);
    CHECK(steps <= m.segment_count());
  }
}

TEST_CASE("validation errors name the invariant") {
  CHECK(validation_message([](ModelDescription& d) {
          d.joints[0].dof_count = 4;
          d.joints[0].axes.assign(4, Vector3d::UnitZ());
          d.joints[0].limits.assign(4, {-1.0, 1.0});
        }).find("D_i exceeds 3") != std::string::npos);
  CHECK(validation_message([](ModelDescription& d) { d.segments[2].name = "link1"; }).find("duplicate segment name 'link1'") !=
        std::string::npos);
  CHECK(validation_message([](ModelDescription& d) { d.segments[1].mass = -1.0; }).find("negative mass") !=
        std::string::npos);
  CHECK(validation_message([](ModelDescription& d) { d.joints[1].parent = "nowhere"; }).find("dangling") !=
        std::string::npos);
  CHECK(validation_message([](ModelDescription& d) {
          d.joints[0].parent = "link2";
        }).find("cycle") != std::string::npos);
  CHECK(validation_message([](ModelDescription& d) { d.joints[0].axes[0] = Vector3d(0, 0, 2); }).find("unit") !=
        std::string::npos);
  CHECK(validation_message([](ModelDescription& d) { d.joints[0].limits[0] = {1.0, -1.0}; }).find("min > max") !=
        std::string::npos);
  CHECK(validation_message([](ModelDescription& d) { d.segments[1].scale = Vector3d(1, 0, 1); }).find("scale") !=
        std::string::npos);
}

TEST_CASE("malformed text is a parse error") {
  CHECK_THROWS_AS(parse_model("{ not json"), ParseError);
  CHECK_THROWS_AS(parse_model(R"({"segments": 5})"), ParseError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ParseError);
}

TEST_CASE("serialize then load round-trips numeric fields") {
  const auto& m = test::full_body();
  const SkeletonModel back = parse_model(serialize_model(m));
  REQUIRE(back.segment_count() == m.segment_count());
  for (int i = 0; i < m.segment_count(); ++i) {
    const auto& a = m.segments()[i];
    const auto& b = back.segments()[i];
    CHECK(a.name == b.name);
    CHECK(std::abs(a.mass - b.mass) <= 1e-12);
    CHECK((a.com - b.com).norm() <= 1e-12);
    CHECK((a.inertia - b.inertia).norm() <= 1e-12);
    CHECK((a.local_offset - b.local_offset).norm() <= 1e-12);
  }
  CHECK(back.joint_count() == m.joint_count());
  CHECK(back.muscle_count() == m.muscle_count());
  CHECK(back.marker_count() == m.marker_count());
  CHECK(back.sphere_count() == m.sphere_count());
  for (int i = 0; i < m.dof(); ++i) {
    CHECK(back.lower_limits()(i) == m.lower_limits()(i));
    CHECK(back.upper_limits()(i) == m.upper_limits()(i));
  }
  CHECK(serialize_model(back) == serialize_model(m));
}

TEST_CASE("coordinate names follow the root then joint layout") {
  const auto& names = test::two_link().coordinate_names();
  REQUIRE(names.size() == 8);
  CHECK(names[0] == "T_x");
  CHECK(names[5] == "R_z");
  CHECK(names[6] == "shoulder_0");
  CHECK(names[7] == "elbow_0");
}

TEST_CASE("identity scaling leaves FK bitwise unchanged") {
  const auto& m = test::full_body();
  std::map<std::string, Vector3d> ones;
  for (const auto& s : m.segments()) ones[s.name] = Vector3d::Ones();
  const SkeletonModel same = scale_model(m, ones);
  std::mt19937_64 rng(3);
  const auto st = test::random_state(m, rng);
  const auto a = marker_positions(m, st);
  const auto b = marker_positions(same, st);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("scaling a segment scales its child joint offsets element-wise") {
  const auto& m = test::two_link();
  const auto st = GeneralizedState::zero(m);
  const auto before = forward_kinematics(m, st);
  const auto doubled = forward_kinematics(scale_model(m, {{"link1", Vector3d::Constant(2.0)}}), st);
  const int l2 = m.segment_index("link2");
  CHECK((doubled.origins[l2] - 2.0 * before.origins[l2]).norm() < 1e-15);

  // Offset (0, 0.4, 0) under (1, 2, 1) becomes (0, 0.8, 0).
  ModelDescription d = two_link_desc();
  d.segments[2].local_offset = Vector3d(0, 0.4, 0);
  const SkeletonModel m2(d);
  const auto p = forward_kinematics(scale_model(m2, {{"link1", Vector3d(1, 2, 1)}}), st);
  CHECK((p.origins[l2] - Vector3d(0, 0.8, 0)).norm() < 1e-15);
}

TEST_CASE("scaling composes multiplicatively") {
  const auto& m = test::full_body();
  const Vector3d a(1.1, 0.9, 1.2), b(0.8, 1.3, 1.05);
  const auto ab = scale_model(scale_model(m, {{"femur_r", a}}), {{"femur_r", b}});
  const auto once = scale_model(m, {{"femur_r", a.cwiseProduct(b)}});
  std::mt19937_64 rng(5);
  const auto st = test::random_state(m, rng);
  const auto x = marker_positions(ab, st);
  const auto y = marker_positions(once, st);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK((x[k] - y[k]).norm() < 1e-12);
}

TEST_CASE("scaling rejects unknown segments and nonpositive factors") {
  const auto& m = test::two_link();
  CHECK_THROWS_AS(scale_model(m, {{"nope", Vector3d::Ones()}}), ValidationError);
  CHECK_THROWS_AS(scale_model(m, {{"link1", Vector3d(1, -1, 1)}}), ValidationError);
}

TEST_CASE("mass is unchanged by default and volumetric on request") {
  const auto& m = test::two_link();
  const Vector3d s(2, 1, 1);
  CHECK(scale_model(m, {{"link1", s}}).segments()[1].mass == doctest::Approx(1.0));
  const auto vol = scale_model(m, {{"link1", s}}, {true});
  CHECK(vol.segments()[1].mass == doctest::Approx(2.0));
  // A thin rod along x scaled 2x along x: inertia about y and z grows by 2 * 4.
  CHECK(vol.segments()[1].inertia(1, 1) == doctest::Approx(8.0 / 12.0).epsilon(0.02));
}

TEST_CASE("canonicalize keeps the rotation and angular velocity") {
  GeneralizedState s{VectorXd::Zero(6), VectorXd::Zero(6)};
  s.q.segment<3>(3) = Vector3d(0, 0, 1).normalized() * 4.0;
  s.qdot.segment<3>(3) = Vector3d(0.3, -0.2, 0.5);
  const auto c = canonicalize(s);
  CHECK(c.R().norm() <= std::numbers::pi);
  CHECK((rot::exp_map<double>(c.R()) - rot::exp_map<double>(s.R())).norm() < 1e-12);
  const Vector3d w0 = rot::left_jacobian<double>(s.R()) * s.qdot.segment<3>(3);
  const Vector3d w1 = rot::left_jacobian<double>(c.R()) * c.qdot.segment<3>(3);
  CHECK((w0 - w1).norm() < 1e-12);
}

TEST_CASE("state dimension mismatch throws") {
  GeneralizedState s{VectorXd::Zero(5), VectorXd::Zero(5)};
  CHECK_THROWS_AS(check_dimensions(test::two_link(), s), DimensionError);
}

}  // TEST_SUITE
