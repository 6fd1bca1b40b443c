#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "temos/errors.hpp"
#include "temos/motion/codecs.hpp"

namespace temos::motion {

namespace {

constexpr double kDegenerateEps = 1e-9;

void require_mmm(const MotionSequence& m, const char* who) {
  if (m.joint_set != JointSet::MMM21 || m.joints != kMmmJointCount) {
    throw InvalidArgument(std::string(who) + ": expected an MMM21 motion");
  }
}

}  // namespace

Eigen::Matrix3d rotation_z(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

LocalFrame compute_local_frame(const Eigen::Vector3d& root, const Eigen::Vector3d& left_hip,
                               const Eigen::Vector3d& right_hip, const Eigen::Vector3d& left_shoulder,
                               const Eigen::Vector3d& right_shoulder) {
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d across = 0.5 * ((left_hip - right_hip) + (left_shoulder - right_shoulder));
  Eigen::Vector3d x = up.cross(across);
  const double norm = x.norm();
  if (!(norm > kDegenerateEps)) {
    throw InvalidArgument("local frame: hips and shoulders are collinear with the up axis");
  }
  LocalFrame lf;
  lf.x_axis = x / norm;
  lf.z_axis = up;
  lf.y_axis = up.cross(lf.x_axis);
  lf.origin = Eigen::Vector3d(root.x(), root.y(), 0.0);
  return lf;
}

LocalFrame compute_local_frame(const MotionSequence& m, std::size_t frame) {
  require_mmm(m, "compute_local_frame");
  return compute_local_frame(m.at(frame, mmm::kRoot), m.at(frame, mmm::kLeftHip), m.at(frame, mmm::kRightHip),
                             m.at(frame, mmm::kLeftShoulder), m.at(frame, mmm::kRightShoulder));
}

MotionSequence canonicalize(const MotionSequence& m) {
  require_mmm(m, "canonicalize");
  if (m.frames == 0) throw InvalidArgument("canonicalize: empty motion");
  const LocalFrame first = compute_local_frame(m, 0);
  const Eigen::Matrix3d r = rotation_z(-first.heading());
  MotionSequence out = m;
  for (std::size_t f = 0; f < m.frames; ++f)
    for (std::size_t j = 0; j < m.joints; ++j) out.at(f, j) = r * (m.at(f, j) - first.origin);
  return out;
}

FeatureSequence encode_skeleton(const MotionSequence& m) {
  require_mmm(m, "encode_skeleton");
  if (m.frames < 2) throw InvalidArgument("encode_skeleton: need at least 2 frames for velocities");
  m.validate();

  FeatureSequence out = FeatureSequence::zeros(m.frames, kSkeletonFeatureDim, m.fps);
  std::vector<double> heading(m.frames);
  for (std::size_t f = 0; f < m.frames; ++f) {
    const LocalFrame lf = compute_local_frame(m, f);
    heading[f] = lf.heading();
    const Eigen::Matrix3d rt = rotation_z(heading[f]).transpose();
    auto row = out.row(f);
    for (std::size_t j = 1; j < kMmmJointCount; ++j) {
      const Eigen::Vector3d local = rt * (m.at(f, j) - lf.origin);
      for (int c = 0; c < 3; ++c) row[(j - 1) * 3 + static_cast<std::size_t>(c)] = local[c];
    }
    row[60] = f == 0 ? 0.0 : wrap_angle(heading[f] - heading[f - 1]);
    row[63] = m.at(f, mmm::kRoot).z();
  }
  for (std::size_t f = 1; f < m.frames; ++f) {
    Eigen::Vector3d delta = m.at(f, mmm::kRoot) - m.at(f - 1, mmm::kRoot);
    delta.z() = 0.0;
    const Eigen::Vector3d local = rotation_z(heading[f]).transpose() * (delta * m.fps);
    out.row(f)[61] = local.x();
    out.row(f)[62] = local.y();
  }
  out.row(0)[61] = out.row(1)[61];
  out.row(0)[62] = out.row(1)[62];
  return out;
}

MotionSequence decode_skeleton(const FeatureSequence& f) {
  if (f.dim != kSkeletonFeatureDim) {
    throw InvalidArgument("decode_skeleton: expected " + std::to_string(kSkeletonFeatureDim) + " channels, got " +
                          std::to_string(f.dim));
  }
  if (f.standardized) throw InvalidArgument("decode_skeleton: features must be destandardized first");
  if (f.frames == 0) throw InvalidArgument("decode_skeleton: no frames");
  for (double v : f.values) {
    if (!std::isfinite(v)) throw NumericalError("decode_skeleton: non-finite feature");
  }

  MotionSequence m = MotionSequence::zeros(f.frames, kMmmJointCount, f.fps);
  double heading = 0.0;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  for (std::size_t t = 0; t < f.frames; ++t) {
    const auto row = f.row(t);
    if (t > 0) {
      heading += row[60];
      origin += rotation_z(heading) * Eigen::Vector3d(row[61], row[62], 0.0) / f.fps;
    }
    const Eigen::Matrix3d r = rotation_z(heading);
    m.at(t, mmm::kRoot) = Eigen::Vector3d(origin.x(), origin.y(), row[63]);
    for (std::size_t j = 1; j < kMmmJointCount; ++j) {
      const Eigen::Vector3d local(row[(j - 1) * 3], row[(j - 1) * 3 + 1], row[(j - 1) * 3 + 2]);
      m.at(t, j) = origin + r * local;
    }
  }
  return m;
}

MotionSequence smpl_to_mmm_joints(const MotionSequence& m, bool rescale) {
  if (m.joint_names.size() != m.joints) {
    throw InvalidArgument("smpl_to_mmm_joints: input motion carries no joint names");
  }
  std::array<std::size_t, kMmmJointCount> source{};
  for (std::size_t i = 0; i < kMmmJointCount; ++i) {
    const auto it = std::find(m.joint_names.begin(), m.joint_names.end(), kSmplNamesForMmm[i]);
    if (it == m.joint_names.end()) {
      throw InvalidArgument("smpl_to_mmm_joints: missing joint '" + std::string(kSmplNamesForMmm[i]) + "'");
    }
    source[i] = static_cast<std::size_t>(it - m.joint_names.begin());
  }
  MotionSequence out = MotionSequence::zeros(m.frames, kMmmJointCount, m.fps, JointSet::MMM21);
  const double s = rescale ? kSmplToMmmScale : 1.0;
  for (std::size_t f = 0; f < m.frames; ++f)
    for (std::size_t j = 0; j < kMmmJointCount; ++j) out.at(f, j) = s * m.at(f, source[j]);
  return out;
}

}  // namespace temos::motion
