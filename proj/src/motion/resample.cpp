#include <algorithm>
#include <cmath>
#include <string>

#include "temos/errors.hpp"
#include "temos/motion/codecs.hpp"

namespace temos::motion {

namespace {
constexpr double kRatioTol = 1e-9;
}

MotionSequence resample(const MotionSequence& m, double target_fps) {
  if (!(target_fps > 0.0)) throw InvalidArgument("resample: target fps must be positive");
  if (m.frames == 0) throw InvalidArgument("resample: empty motion");
  const double ratio = m.fps / target_fps;
  if (std::abs(ratio - 1.0) < kRatioTol) return m;

  if (ratio > 1.0) {
    const double stride_d = std::round(ratio);
    if (std::abs(ratio - stride_d) > kRatioTol * ratio) {
      throw InvalidArgument("resample: " + std::to_string(m.fps) + " -> " + std::to_string(target_fps) +
                            " Hz is not an integer stride");
    }
    const auto stride = static_cast<std::size_t>(stride_d);
    const std::size_t frames = (m.frames + stride - 1) / stride;
    MotionSequence out = m;
    out.frames = frames;
    out.fps = target_fps;
    out.positions.assign(frames * m.joints * 3, 0.0);
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t j = 0; j < m.joints; ++j) out.at(f, j) = m.at(f * stride, j);
    return out;
  }

  const double span = static_cast<double>(m.frames - 1) / m.fps;
  const auto frames = static_cast<std::size_t>(std::floor(span * target_fps + kRatioTol)) + 1;
  return interpolate_to(m, target_fps, frames);
}

MotionSequence interpolate_to(const MotionSequence& m, double target_fps, std::size_t frames) {
  if (!(target_fps > 0.0)) throw InvalidArgument("interpolate_to: target fps must be positive");
  if (m.frames == 0) throw InvalidArgument("interpolate_to: empty motion");
  MotionSequence out = m;
  out.frames = frames;
  out.fps = target_fps;
  out.positions.assign(frames * m.joints * 3, 0.0);
  const double last = static_cast<double>(m.frames - 1);
  for (std::size_t f = 0; f < frames; ++f) {
    const double pos = std::min(static_cast<double>(f) * m.fps / target_fps, last);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, m.frames - 1);
    const double w = pos - static_cast<double>(lo);
    for (std::size_t j = 0; j < m.joints; ++j) {
      out.at(f, j) = w == 0.0 ? Eigen::Vector3d(m.at(lo, j)) : Eigen::Vector3d((1.0 - w) * m.at(lo, j) + w * m.at(hi, j));
    }
  }
  return out;
}

}  // namespace temos::motion
