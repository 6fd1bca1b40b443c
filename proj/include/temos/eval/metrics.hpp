#pragma once

// Positional and variance errors over four joint groupings:
//   root        the root joint, 3D
//   traj        the root joint, X and Y only
//   mean_local  non-root joints in each frame's body-local coordinates
//   mean_global all joints in global coordinates
// Inputs are expected to be canonicalized already.

#include <array>
#include <string_view>

#include "temos/motion/types.hpp"

namespace temos::eval {

enum class Grouping { Root, Traj, MeanLocal, MeanGlobal };
inline constexpr std::array<Grouping, 4> kGroupings = {Grouping::Root, Grouping::Traj, Grouping::MeanLocal,
                                                       Grouping::MeanGlobal};
std::string_view to_string(Grouping g);

struct MetricReport {
  std::array<double, 4> ape{};  // indexed by Grouping
  std::array<double, 4> ave{};

  double ape_of(Grouping g) const { return ape[static_cast<std::size_t>(g)]; }
  double ave_of(Grouping g) const { return ave[static_cast<std::size_t>(g)]; }
  double root_ape() const { return ape_of(Grouping::Root); }

  MetricReport& operator+=(const MetricReport& o);
  MetricReport& operator/=(double n);
};

// Rotates about Z so the first frame faces +X and moves its root's ground
// projection to the origin. Throws InvalidArgument on a degenerate first frame.
motion::MotionSequence canonicalize_for_eval(const motion::MotionSequence& m);

// Both throw InvalidArgument on mismatched frame or joint counts; ave needs
// at least two frames.
double ape(const motion::MotionSequence& gt, const motion::MotionSequence& pred, Grouping g);
double ave(const motion::MotionSequence& gt, const motion::MotionSequence& pred, Grouping g);
MetricReport compute_metrics(const motion::MotionSequence& gt, const motion::MotionSequence& pred);

}  // namespace temos::eval
