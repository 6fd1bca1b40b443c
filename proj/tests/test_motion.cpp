#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "temos/errors.hpp"
#include "temos/motion/codecs.hpp"
#include "temos/motion/tmf.hpp"

using namespace temos;
using namespace temos::motion;

namespace {

MotionSequence rotate_translate(const MotionSequence& m, double angle, const Eigen::Vector3d& t) {
  MotionSequence out = m;
  const Eigen::Matrix3d r = rotation_z(angle);
  for (std::size_t f = 0; f < m.frames; ++f)
    for (std::size_t j = 0; j < m.joints; ++j) out.at(f, j) = r * m.at(f, j) + t;
  return out;
}

}  // namespace

TEST_CASE("local frame of the rest pose faces +X") {
  std::mt19937_64 rng(1);
  auto m = test::random_smooth_motion(rng, 4);
  for (std::size_t j = 0; j < 21; ++j) m.at(0, j) = test::rest_joint(j);
  const LocalFrame lf = compute_local_frame(m, 0);
  CHECK(lf.x_axis.isApprox(Eigen::Vector3d::UnitX(), 1e-12));
  CHECK(lf.y_axis.isApprox(Eigen::Vector3d::UnitY(), 1e-12));
  CHECK(lf.heading() == doctest::Approx(0.0));
  CHECK(lf.origin.z() == 0.0);
}

TEST_CASE("local frame rejects hips and shoulders stacked vertically") {
  const Eigen::Vector3d p(0, 0, 1);
  CHECK_THROWS_AS(compute_local_frame(p, p, p + Eigen::Vector3d(0, 0, 0.1), p, p), InvalidArgument);
}

TEST_CASE("canonicalize postconditions") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = test::random_smooth_motion(rng, 30);
    const auto c = canonicalize(m);
    const LocalFrame lf = compute_local_frame(c, 0);
    CHECK(std::abs(lf.heading()) < 1e-12);
    CHECK(lf.origin.norm() < 1e-12);
    CHECK(test::max_abs_diff(canonicalize(c), c) < 1e-6);
    const auto moved = rotate_translate(m, std::numbers::pi / 2, Eigen::Vector3d(1.5, -2.0, 0.0));
    CHECK(test::max_abs_diff(canonicalize(moved), c) < 1e-9);
  }
}

TEST_CASE("wrap_angle stays in (-pi, pi]") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
}

TEST_CASE("skeleton codec round-trip reproduces the canonicalized motion") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = test::random_smooth_motion(rng, 10 + trial % 50);
    const auto f = encode_skeleton(m);
    REQUIRE(f.dim == kSkeletonFeatureDim);
    const auto back = decode_skeleton(f);
    CHECK(test::max_abs_diff(back, canonicalize(m)) < 1e-4);
  }
}

TEST_CASE("skeleton features of a straight walk") {
  auto m = MotionSequence::zeros(3, 21, 10.0);
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t j = 0; j < 21; ++j)
      m.at(f, j) = test::rest_joint(j) + Eigen::Vector3d(0.1 * static_cast<double>(f), 0, 0);
  const auto feat = encode_skeleton(m);
  for (std::size_t f = 0; f < 3; ++f) {
    CHECK(feat.row(f)[60] == doctest::Approx(0.0));
    CHECK(feat.row(f)[61] == doctest::Approx(1.0));
    CHECK(feat.row(f)[62] == doctest::Approx(0.0));
    CHECK(feat.row(f)[63] == doctest::Approx(0.95));
  }
  // Left shoulder in local coordinates.
  CHECK(feat.row(1)[(5 - 1) * 3 + 1] == doctest::Approx(-0.18));
}

TEST_CASE("skeleton codec input errors") {
  std::mt19937_64 rng(4);
  CHECK_THROWS_AS(encode_skeleton(test::random_smooth_motion(rng, 1)), InvalidArgument);
  CHECK_THROWS_AS(decode_skeleton(FeatureSequence::zeros(4, 63)), InvalidArgument);
  auto f = FeatureSequence::zeros(4, 64);
  f.standardized = true;
  CHECK_THROWS_AS(decode_skeleton(f), InvalidArgument);
  f.standardized = false;
  f.values[5] = std::nan("");
  CHECK_THROWS_AS(decode_skeleton(f), NumericalError);
}

TEST_CASE("6D rotation round-trip") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Matrix3d r = test::random_rotation(rng);
    const auto six = rot_to_6d(r);
    const Eigen::Matrix3d back = sixd_to_rot(six);
    CHECK((back - r).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("6D decode orthonormalizes and rejects parallel vectors") {
  const std::array<double, 6> skew = {2, 0, 0, 1, 1, 0};
  const Eigen::Matrix3d r = sixd_to_rot(skew);
  CHECK(r.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
  const std::array<double, 6> parallel = {1, 2, 3, 2, 4, 6};
  CHECK_THROWS_AS(sixd_to_rot(parallel), InvalidArgument);
  const std::array<double, 6> zero = {0, 0, 0, 0, 1, 0};
  CHECK_THROWS_AS(sixd_to_rot(zero), InvalidArgument);
}

TEST_CASE("SMPL codec round-trip reproduces the canonicalized sequence") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = test::random_smooth_smpl(rng, 5 + trial % 30);
    const auto f = encode_smpl(s);
    REQUIRE(f.dim == kSmplFeatureDim);
    const auto back = decode_smpl(f);
    const auto c = canonicalize_smpl(s);
    double err = 0.0;
    for (std::size_t t = 0; t < s.frames; ++t) {
      for (std::size_t j = 0; j < kSmplBodyJoints; ++j) err = std::max(err, (back.body(t, j) - c.body(t, j)).cwiseAbs().maxCoeff());
      err = std::max(err, (back.global_rot[t] - c.global_rot[t]).cwiseAbs().maxCoeff());
      err = std::max(err, (back.root_trans[t] - c.root_trans[t]).cwiseAbs().maxCoeff());
    }
    CHECK(err < 1e-4);
    CHECK(std::abs(smpl_heading(c.global_rot[0])) < 1e-12);
  }
}

TEST_CASE("SMPL to MMM joint selection by name") {
  std::vector<std::string> names;
  for (auto n : kSmplNamesForMmm) names.emplace_back(n);
  std::reverse(names.begin(), names.end());
  names.emplace_back("left_index1");
  auto m = MotionSequence::zeros(2, names.size(), 30.0, JointSet::SMPLH);
  m.joint_names = names;
  for (std::size_t j = 0; j < names.size(); ++j) m.at(1, j) = Eigen::Vector3d(static_cast<double>(j), 0, 1);
  const auto out = smpl_to_mmm_joints(m, true);
  CHECK(out.joints == 21);
  CHECK(out.at(1, 0).x() == doctest::Approx(20 * kSmplToMmmScale));  // pelvis was last before reversal
  CHECK(out.at(1, 20).x() == doctest::Approx(0.0));
  CHECK(out.at(1, 3).z() == doctest::Approx(kSmplToMmmScale));
  m.joint_names.clear();
  CHECK_THROWS_AS(smpl_to_mmm_joints(m, false), InvalidArgument);
}

TEST_CASE("resample by integer stride and linear upsampling") {
  std::mt19937_64 rng(7);
  const auto m = test::random_smooth_motion(rng, 81, 100.0);
  const auto down = resample(m, 12.5);
  CHECK(down.frames == 11);
  CHECK(down.fps == 12.5);
  CHECK(test::max_abs_diff(down, m) >= 0.0);
  for (std::size_t f = 0; f < down.frames; ++f) CHECK(down.at(f, 7) == m.at(f * 8, 7));

  const auto up = resample(down, 100.0);
  CHECK(up.frames == 81);
  for (std::size_t f = 0; f < 81; f += 8) CHECK((up.at(f, 3) - down.at(f / 8, 3)).norm() < 1e-12);
  const Eigen::Vector3d mid = 0.75 * down.at(2, 3) + 0.25 * down.at(3, 3);
  CHECK((up.at(18, 3) - mid).norm() < 1e-12);

  CHECK_THROWS_AS(resample(m, 30.0), InvalidArgument);
  const auto held = interpolate_to(down, 100.0, 90);
  CHECK(held.frames == 90);
  CHECK((held.at(89, 0) - down.at(10, 0)).norm() == 0.0);
}

TEST_CASE("standardization statistics and inverse") {
  auto a = FeatureSequence::zeros(2, 2);
  auto b = FeatureSequence::zeros(2, 2);
  a.values = {1, 5, 3, 5};
  b.values = {5, 5, 7, 5};
  const std::vector<FeatureSequence> train{a, b};
  const auto stats = fit_standardization(std::span<const FeatureSequence>(train));
  CHECK(stats.mean[0] == doctest::Approx(4.0));
  CHECK(stats.std[0] == doctest::Approx(std::sqrt(5.0)));
  CHECK(stats.mean[1] == doctest::Approx(5.0));
  CHECK(stats.std[1] == kStdFloor);
  const auto z = standardize(a, stats);
  CHECK(z.standardized);
  CHECK(z.values[0] == doctest::Approx(-3.0 / std::sqrt(5.0)));
  const auto back = destandardize(z, stats);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.values[i] == doctest::Approx(a.values[i]));
  CHECK_THROWS_AS(standardize(z, stats), InvalidArgument);
}

TEST_CASE("TMF1 container round-trip and corruption") {
  TmfMatrix m{2, 3, {1.5f, -2.f, 0.f, 3.25f, 1e-3f, 7.f}};
  std::stringstream ss;
  write_tmf(ss, m);
  const std::string bytes = ss.str();
  CHECK(bytes.size() == 8 + 8 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "TMF1");
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  CHECK(static_cast<unsigned char>(bytes[12]) == 3);
  const auto back = read_tmf(ss);
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK(back.values == m.values);

  std::stringstream bad("TMF2xxxxxxxxxxxxxxxxxxxx");
  CHECK_THROWS_AS(read_tmf(bad), DataError);
  std::stringstream truncated(bytes.substr(0, 20));
  CHECK_THROWS_AS(read_tmf(truncated), DataError);
}

TEST_CASE("joint matrix width must be a multiple of three") {
  TmfMatrix m{1, 4, {0, 0, 0, 0}};
  CHECK_THROWS_AS(motion_from_tmf(m, 100.0), DataError);
}
