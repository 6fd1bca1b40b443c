#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "temos/errors.hpp"
#include "temos/motion/codecs.hpp"

namespace temos::motion {

namespace {
constexpr double kParallelEps = 1e-9;
}

std::array<double, 6> rot_to_6d(const Eigen::Matrix3d& r) {
  return {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
}

Eigen::Matrix3d sixd_to_rot(std::span<const double, 6> v) {
  const Eigen::Vector3d a1(v[0], v[1], v[2]);
  const Eigen::Vector3d a2(v[3], v[4], v[5]);
  const double n1 = a1.norm();
  if (!(n1 > kParallelEps)) throw InvalidArgument("sixd_to_rot: first vector is zero");
  const Eigen::Vector3d b1 = a1 / n1;
  const Eigen::Vector3d u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  if (!(n2 > kParallelEps * std::max(1.0, a2.norm()))) {
    throw InvalidArgument("sixd_to_rot: the two vectors are parallel");
  }
  const Eigen::Vector3d b2 = u2 / n2;
  Eigen::Matrix3d r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

double smpl_heading(const Eigen::Matrix3d& global_rot) {
  const Eigen::Vector3d x = global_rot.col(0);
  if (std::hypot(x.x(), x.y()) < kParallelEps) {
    throw InvalidArgument("smpl_heading: body X-axis is vertical, heading undefined");
  }
  return std::atan2(x.y(), x.x());
}

SmplPoseSequence canonicalize_smpl(const SmplPoseSequence& s) {
  if (s.frames == 0) throw InvalidArgument("canonicalize_smpl: empty sequence");
  const Eigen::Matrix3d rc = rotation_z(-smpl_heading(s.global_rot[0]));
  const Eigen::Vector3d offset(s.root_trans[0].x(), s.root_trans[0].y(), 0.0);
  SmplPoseSequence out = s;
  for (std::size_t f = 0; f < s.frames; ++f) {
    out.global_rot[f] = rc * s.global_rot[f];
    out.root_trans[f] = rc * (s.root_trans[f] - offset);
  }
  return out;
}

FeatureSequence encode_smpl(const SmplPoseSequence& input) {
  if (input.frames < 2) throw InvalidArgument("encode_smpl: need at least 2 frames for velocities");
  input.validate();
  const SmplPoseSequence s = canonicalize_smpl(input);
  FeatureSequence out = FeatureSequence::zeros(s.frames, kSmplFeatureDim, s.fps);
  for (std::size_t f = 0; f < s.frames; ++f) {
    auto row = out.row(f);
    for (std::size_t j = 0; j < kSmplBodyJoints; ++j) {
      const auto six = rot_to_6d(s.body(f, j));
      std::copy(six.begin(), six.end(), row.begin() + static_cast<std::ptrdiff_t>(j * 6));
    }
    const auto g = rot_to_6d(s.global_rot[f]);
    std::copy(g.begin(), g.end(), row.begin() + 126);
    row[134] = s.root_trans[f].z();
  }
  for (std::size_t f = 1; f < s.frames; ++f) {
    const Eigen::Vector3d v = (s.root_trans[f] - s.root_trans[f - 1]) * s.fps;
    out.row(f)[132] = v.x();
    out.row(f)[133] = v.y();
  }
  out.row(0)[132] = out.row(1)[132];
  out.row(0)[133] = out.row(1)[133];
  return out;
}

SmplPoseSequence decode_smpl(const FeatureSequence& f) {
  if (f.dim != kSmplFeatureDim) {
    throw InvalidArgument("decode_smpl: expected " + std::to_string(kSmplFeatureDim) + " channels, got " +
                          std::to_string(f.dim));
  }
  if (f.standardized) throw InvalidArgument("decode_smpl: features must be destandardized first");
  for (double v : f.values) {
    if (!std::isfinite(v)) throw NumericalError("decode_smpl: non-finite feature");
  }
  SmplPoseSequence s = SmplPoseSequence::identity(f.frames, f.fps);
  Eigen::Vector3d xy = Eigen::Vector3d::Zero();
  for (std::size_t t = 0; t < f.frames; ++t) {
    const auto row = f.row(t);
    for (std::size_t j = 0; j < kSmplBodyJoints; ++j) s.body(t, j) = sixd_to_rot(row.subspan(j * 6).first<6>());
    s.global_rot[t] = sixd_to_rot(row.subspan(126).first<6>());
    if (t > 0) xy += Eigen::Vector3d(row[132], row[133], 0.0) / f.fps;
    s.root_trans[t] = Eigen::Vector3d(xy.x(), xy.y(), row[134]);
  }
  return s;
}

}  // namespace temos::motion
