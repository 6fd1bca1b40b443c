#pragma once

// Bidirectional motion codecs and the geometry they rely on.
//
// Skeleton features (64 per frame):
//   [0, 60)  the 20 non-root joints in the body's local frame
//   60       heading change since the previous frame (0 on the first frame)
//   61, 62   root X/Y velocity (m/s): the global displacement from the
//            previous frame, times fps, rotated into the current local frame
//            (frame 0 repeats frame 1)
//   63       absolute root height
//
// SMPL features (135 per frame):
//   [0, 126)   21 parent-relative body rotations, 6D each
//   [126, 132) global orientation, 6D
//   132, 133   root X/Y velocity in global coordinates (m/s), frame 0 repeats frame 1
//   134        root height
//
// Both codecs canonicalize: decoding starts at heading 0 with the root above
// the global origin, so decode(encode(m)) == canonicalize(m).

#include <array>
#include <span>

#include <Eigen/Core>

#include "temos/motion/types.hpp"

namespace temos::motion {

inline constexpr double kStdFloor = 1e-8;

// X = normalize(up x avg(LH - RH, LS - RS)), Z = up, Y = Z x X.
LocalFrame compute_local_frame(const Eigen::Vector3d& root, const Eigen::Vector3d& left_hip,
                               const Eigen::Vector3d& right_hip, const Eigen::Vector3d& left_shoulder,
                               const Eigen::Vector3d& right_shoulder);
LocalFrame compute_local_frame(const MotionSequence& m, std::size_t frame);

Eigen::Matrix3d rotation_z(double angle);
double wrap_angle(double a);  // into (-pi, pi]

// Rotates about Z and translates so frame 0 faces +X with the root above the origin.
MotionSequence canonicalize(const MotionSequence& m);

FeatureSequence encode_skeleton(const MotionSequence& m);
MotionSequence decode_skeleton(const FeatureSequence& f);

// First two columns, column-major: (R00, R10, R20, R01, R11, R21).
std::array<double, 6> rot_to_6d(const Eigen::Matrix3d& r);
// Gram-Schmidt on the two 3-vectors; third column by cross product.
Eigen::Matrix3d sixd_to_rot(std::span<const double, 6> v);

// Heading of the body-local X-axis of a global orientation.
double smpl_heading(const Eigen::Matrix3d& global_rot);
SmplPoseSequence canonicalize_smpl(const SmplPoseSequence& s);
FeatureSequence encode_smpl(const SmplPoseSequence& s);
SmplPoseSequence decode_smpl(const FeatureSequence& f);

// Selects the 21 MMM correspondents (MMM order) by joint name.
inline constexpr double kSmplToMmmScale = 0.64;
inline constexpr std::array<std::string_view, kMmmJointCount> kSmplNamesForMmm = {
    "pelvis", "spine1", "spine3", "neck", "head", "left_shoulder", "left_elbow", "left_wrist",
    "right_shoulder", "right_elbow", "right_wrist", "left_hip", "left_knee", "left_ankle", "left_heel",
    "left_foot", "right_hip", "right_knee", "right_ankle", "right_heel", "right_foot"};
MotionSequence smpl_to_mmm_joints(const MotionSequence& m, bool rescale);

// Integer-stride downsampling or linear-interpolation upsampling.
MotionSequence resample(const MotionSequence& m, double target_fps);
// Linear interpolation at times i / target_fps for i < frames; times past the
// last source frame hold the last pose.
MotionSequence interpolate_to(const MotionSequence& m, double target_fps, std::size_t frames);

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::size_t dim() const { return mean.size(); }
};

StandardizationStats fit_standardization(std::span<const FeatureSequence* const> train);
StandardizationStats fit_standardization(std::span<const FeatureSequence> train);
FeatureSequence standardize(const FeatureSequence& f, const StandardizationStats& stats);
FeatureSequence destandardize(const FeatureSequence& f, const StandardizationStats& stats);

}  // namespace temos::motion
