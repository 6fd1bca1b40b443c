#pragma once

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "temos/motion/codecs.hpp"
#include "temos/motion/types.hpp"

namespace temos::test {

// Standing skeleton facing +X, left side toward -Y.
inline Eigen::Vector3d rest_joint(std::size_t j) {
  static const double kRest[21][3] = {
      {0, 0, 0.95},      {0, 0, 1.05},       {0, 0, 1.25},        {0, 0, 1.45},      {0.02, 0, 1.6},
      {0, -0.18, 1.42},  {0, -0.2, 1.15},    {0.02, -0.2, 0.9},   {0, 0.18, 1.42},   {0, 0.2, 1.15},
      {0.02, 0.2, 0.9},  {0, -0.09, 0.92},   {0, -0.09, 0.5},     {0, -0.09, 0.08},  {-0.04, -0.09, 0.02},
      {0.14, -0.09, 0.02}, {0, 0.09, 0.92},  {0, 0.09, 0.5},      {0, 0.09, 0.08},   {-0.04, 0.09, 0.02},
      {0.14, 0.09, 0.02}};
  return {kRest[j][0], kRest[j][1], kRest[j][2]};
}

// Random smooth MMM motion: wobbling joints on a body that drifts and turns.
inline motion::MotionSequence random_smooth_motion(std::mt19937_64& rng, std::size_t frames, double fps = 12.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto m = motion::MotionSequence::zeros(frames, motion::kMmmJointCount, fps);
  const double heading0 = 3.0 * u(rng), turn = 1.5 * u(rng), drift_x = 3.0 * u(rng), drift_y = 3.0 * u(rng);
  const double w = 0.5 + 0.4 * u(rng);
  double phase[21][3], amp[21][3];
  for (auto& row : phase)
    for (double& p : row) p = 3.0 * u(rng);
  for (auto& row : amp)
    for (double& a : row) a = 0.04 * u(rng);
  const Eigen::Vector3d start(5.0 * u(rng), 5.0 * u(rng), 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / static_cast<double>(std::max<std::size_t>(frames - 1, 1));
    const double heading = heading0 + turn * std::sin(2.0 * t);
    const Eigen::Matrix3d r = motion::rotation_z(heading);
    const Eigen::Vector3d offset = start + Eigen::Vector3d(drift_x * t + 0.3 * std::sin(w * 6 * t), drift_y * t * t, 0.0);
    for (std::size_t j = 0; j < motion::kMmmJointCount; ++j) {
      Eigen::Vector3d p = rest_joint(j);
      for (int c = 0; c < 3; ++c) p[c] += amp[j][c] * std::sin(6.0 * w * t + phase[j][c]);
      m.at(f, j) = offset + r * p;
    }
  }
  return m;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline double max_abs_diff(const motion::MotionSequence& a, const motion::MotionSequence& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.positions.size(); ++i) e = std::max(e, std::abs(a.positions[i] - b.positions[i]));
  return e;
}

}  // namespace temos::test

namespace temos::test {

inline Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline motion::SmplPoseSequence random_smooth_smpl(std::mt19937_64& rng, std::size_t frames, double fps = 12.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n;
  auto s = motion::SmplPoseSequence::identity(frames, fps);
  Eigen::Matrix3d base[21];
  Eigen::Vector3d axis[21];
  double amp[21], phase[21];
  for (std::size_t j = 0; j < 21; ++j) {
    base[j] = random_rotation(rng);
    axis[j] = Eigen::Vector3d(n(rng), n(rng), n(rng));
    amp[j] = 0.8 * u(rng);
    phase[j] = 3.0 * u(rng);
  }
  const double heading0 = 3.0 * u(rng), turn = 1.5 * u(rng), tilt = 0.3 * u(rng);
  const Eigen::Vector3d start(4.0 * u(rng), 4.0 * u(rng), 0.9 + 0.1 * u(rng));
  const Eigen::Vector3d drift(2.0 * u(rng), 2.0 * u(rng), 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / static_cast<double>(std::max<std::size_t>(frames - 1, 1));
    for (std::size_t j = 0; j < 21; ++j) s.body(f, j) = axis_angle(axis[j], amp[j] * std::sin(4.0 * t + phase[j])) * base[j];
    s.global_rot[f] = motion::rotation_z(heading0 + turn * t) * axis_angle(Eigen::Vector3d::UnitY(), tilt * std::sin(3 * t));
    s.root_trans[f] = start + drift * t + Eigen::Vector3d(0.0, 0.0, 0.05 * std::sin(5.0 * t));
  }
  return s;
}

}  // namespace temos::test
