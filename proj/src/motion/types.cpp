#include "temos/motion/types.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "temos/errors.hpp"

namespace temos::motion {

std::string_view to_string(JointSet set) {
  switch (set) {
    case JointSet::MMM21:
      return "MMM21";
    case JointSet::SMPLH:
      return "SMPLH";
  }
  return "?";
}

JointSet joint_set_from_string(std::string_view name) {
  if (name == "MMM21") return JointSet::MMM21;
  if (name == "SMPLH") return JointSet::SMPLH;
  throw DataError("unknown joint set '" + std::string(name) + "'");
}

void MotionSequence::validate() const {
  if (frames == 0) throw DataError("motion: no frames");
  if (positions.size() != frames * joints * 3) throw DataError("motion: position count does not match frames x joints");
  if (joint_set == JointSet::MMM21 && joints != kMmmJointCount) {
    throw DataError("motion: MMM21 sequence has " + std::to_string(joints) + " joints");
  }
  if (!(fps > 0.0)) throw DataError("motion: fps must be positive");
  for (double v : positions) {
    if (!std::isfinite(v)) throw DataError("motion: non-finite coordinate");
  }
}

double LocalFrame::heading() const { return std::atan2(x_axis.y(), x_axis.x()); }

Eigen::Matrix3d LocalFrame::rotation() const {
  Eigen::Matrix3d r;
  r.col(0) = x_axis;
  r.col(1) = y_axis;
  r.col(2) = z_axis;
  return r;
}

SmplPoseSequence SmplPoseSequence::identity(std::size_t frames, double fps) {
  SmplPoseSequence s;
  s.frames = frames;
  s.fps = fps;
  s.body_rots.assign(frames * kSmplBodyJoints, Eigen::Matrix3d::Identity());
  s.global_rot.assign(frames, Eigen::Matrix3d::Identity());
  s.root_trans.assign(frames, Eigen::Vector3d::Zero());
  return s;
}

void SmplPoseSequence::validate(double tol) const {
  if (body_rots.size() != frames * kSmplBodyJoints || global_rot.size() != frames || root_trans.size() != frames) {
    throw DataError("smpl: array sizes do not match frame count");
  }
  auto check = [tol](const Eigen::Matrix3d& r) {
    if (!r.allFinite() || (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol ||
        std::abs(r.determinant() - 1.0) > tol) {
      throw DataError("smpl: rotation matrix is not in SO(3)");
    }
  };
  for (const auto& r : body_rots) check(r);
  for (const auto& r : global_rot) check(r);
  for (const auto& t : root_trans) {
    if (!t.allFinite()) throw DataError("smpl: non-finite root translation");
  }
}

}  // namespace temos::motion
