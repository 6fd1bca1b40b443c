#pragma once

// Procedural MMM21 motions with templated descriptions.

#include <cstdint>
#include <string>
#include <vector>

#include "temos/data/dataset.hpp"

namespace temos::data {

enum class SynthKind { WalkStraight, WalkCircle, TurnLeft, TurnRight, RaiseArm, Crouch };
inline constexpr int kSynthKindCount = 6;
std::string_view to_string(SynthKind k);

enum class ArmSide { Left, Right, Both };

struct SynthParams {
  SynthKind kind = SynthKind::WalkStraight;
  std::size_t frames = 40;  // at the model rate
  double start_heading = 0.0;
  double start_x = 0.0, start_y = 0.0;
  double speed = 1.0;        // m/s, walking kinds
  double radius = 1.5;       // m, circle
  bool clockwise = false;    // circle direction
  double turn_angle = 1.57;  // rad, turns (magnitude)
  ArmSide arm = ArmSide::Left;
  double depth = 0.3;        // m, crouch
};

// Generated at 100 Hz with (frames - 1) * 8 + 1 poses so that resampling to
// the model rate yields exactly `frames`.
motion::MotionSequence synth_motion(const SynthParams& p);

// Heading change of the root trajectory over the whole motion (signed,
// counter-clockwise positive).
double synth_swept_angle(const SynthParams& p);

std::vector<std::string> synth_descriptions(const SynthParams& p, std::mt19937_64& rng);

// Kinds cycle with the entry index; everything else is drawn from `seed`.
// Entry i goes to val when i % 10 == 8, test when i % 10 == 9, else train.
std::vector<SynthParams> synth_params(std::uint64_t seed, std::size_t n);
std::vector<DatasetEntry> synth_corpus(std::uint64_t seed, std::size_t n);

}  // namespace temos::data
