#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace temos::motion {

enum class JointSet { MMM21, SMPLH };

std::string_view to_string(JointSet set);
JointSet joint_set_from_string(std::string_view name);

// KIT / MMM skeleton order. The root is joint 0.
inline constexpr std::size_t kMmmJointCount = 21;
inline constexpr std::array<std::string_view, kMmmJointCount> kMmmJointNames = {
    "root", "BP", "BT", "BLN", "BUN", "LS", "LE", "LW", "RS", "RE", "RW",
    "LH", "LK", "LA", "LMrot", "LF", "RH", "RK", "RA", "RMrot", "RF"};

namespace mmm {
inline constexpr std::size_t kRoot = 0;
inline constexpr std::size_t kLeftShoulder = 5;
inline constexpr std::size_t kRightShoulder = 8;
inline constexpr std::size_t kLeftHip = 11;
inline constexpr std::size_t kRightHip = 16;
}  // namespace mmm

// Joint positions in meters, Z up, [frames x joints x 3] row-major.
struct MotionSequence {
  std::size_t frames = 0;
  std::size_t joints = 0;
  double fps = 12.5;
  JointSet joint_set = JointSet::MMM21;
  // Required for SMPLH sequences (used by the MMM joint mapping).
  std::vector<std::string> joint_names;
  std::vector<double> positions;

  static MotionSequence zeros(std::size_t frames, std::size_t joints, double fps,
                              JointSet set = JointSet::MMM21) {
    MotionSequence m;
    m.frames = frames;
    m.joints = joints;
    m.fps = fps;
    m.joint_set = set;
    m.positions.assign(frames * joints * 3, 0.0);
    return m;
  }

  Eigen::Map<Eigen::Vector3d> at(std::size_t f, std::size_t j) { return Eigen::Map<Eigen::Vector3d>(&positions[(f * joints + j) * 3]); }
  Eigen::Map<const Eigen::Vector3d> at(std::size_t f, std::size_t j) const {
    return Eigen::Map<const Eigen::Vector3d>(&positions[(f * joints + j) * 3]);
  }

  // Throws DataError on shape mismatch, F == 0, wrong MMM joint count or
  // non-finite coordinates.
  void validate() const;
};

// Model-facing [frames x dim] features.
struct FeatureSequence {
  std::size_t frames = 0;
  std::size_t dim = 0;
  double fps = 12.5;
  bool standardized = false;
  std::vector<double> values;

  static FeatureSequence zeros(std::size_t frames, std::size_t dim, double fps = 12.5) {
    return {frames, dim, fps, false, std::vector<double>(frames * dim, 0.0)};
  }

  std::span<double> row(std::size_t f) { return {values.data() + f * dim, dim}; }
  std::span<const double> row(std::size_t f) const { return {values.data() + f * dim, dim}; }
};

inline constexpr std::size_t kSkeletonFeatureDim = 64;  // 60 local joints + 1 heading delta + 3 root
inline constexpr std::size_t kSmplBodyJoints = 21;
inline constexpr std::size_t kSmplFeatureDim = kSmplBodyJoints * 6 + 6 + 3;  // 135

// Origin on the ground under the root; Z is global up.
struct LocalFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d x_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d y_axis = Eigen::Vector3d::UnitY();
  Eigen::Vector3d z_axis = Eigen::Vector3d::UnitZ();

  // Angle of the local X-axis from the global X-axis about Z.
  double heading() const;
  Eigen::Matrix3d rotation() const;  // columns = axes
};

// Parent-relative body rotations (hands removed), global orientation and root
// translation in meters.
struct SmplPoseSequence {
  std::size_t frames = 0;
  double fps = 12.5;
  std::vector<Eigen::Matrix3d> body_rots;   // frames * 21
  std::vector<Eigen::Matrix3d> global_rot;  // frames
  std::vector<Eigen::Vector3d> root_trans;  // frames

  Eigen::Matrix3d& body(std::size_t f, std::size_t j) { return body_rots[f * kSmplBodyJoints + j]; }
  const Eigen::Matrix3d& body(std::size_t f, std::size_t j) const { return body_rots[f * kSmplBodyJoints + j]; }

  static SmplPoseSequence identity(std::size_t frames, double fps = 12.5);
  void validate(double tol = 1e-6) const;
};

}  // namespace temos::motion
