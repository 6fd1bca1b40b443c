#include "temos/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "temos/errors.hpp"

namespace temos::data {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kUpsample = 8;  // 100 Hz / 12.5 Hz
constexpr double kThigh = 0.42, kShin = 0.42, kUpperArm = 0.27, kForearm = 0.25;
constexpr double kPelvisHeight = 0.95;

// Joint angles for one instant; angles in radians, positive = forward.
struct Pose {
  double heading = 0.0;
  double x = 0.0, y = 0.0;
  double drop = 0.0;  // pelvis lowered by this much
  double leg[2] = {0.0, 0.0};
  double knee[2] = {0.0, 0.0};
  double arm[2] = {0.0, 0.0};
  double elbow[2] = {0.15, 0.15};
};

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

void apply_gait(Pose& pose, double t, double freq, double amplitude) {
  const double psi = 2.0 * kPi * freq * t;
  pose.leg[0] = amplitude * std::sin(psi);
  pose.leg[1] = -pose.leg[0];
  pose.knee[0] = 1.6 * amplitude * std::max(0.0, std::sin(psi + kPi / 2));
  pose.knee[1] = 1.6 * amplitude * std::max(0.0, std::sin(psi - kPi / 2));
  pose.arm[0] = -0.8 * pose.leg[0];
  pose.arm[1] = -0.8 * pose.leg[1];
  pose.drop = 0.015 * (1.0 - std::cos(2.0 * psi));
}

Pose pose_at(const SynthParams& p, double t, double duration) {
  Pose pose;
  pose.heading = p.start_heading;
  pose.x = p.start_x;
  pose.y = p.start_y;
  const double s = duration > 0.0 ? t / duration : 0.0;
  switch (p.kind) {
    case SynthKind::WalkStraight:
      pose.x += p.speed * t * std::cos(p.start_heading);
      pose.y += p.speed * t * std::sin(p.start_heading);
      apply_gait(pose, t, p.speed / 1.2, 0.25 + 0.12 * p.speed);
      break;
    case SynthKind::WalkCircle: {
      const double dir = p.clockwise ? -1.0 : 1.0;
      const double omega = dir * p.speed / p.radius;
      pose.heading = p.start_heading + omega * t;
      pose.x += dir * p.radius * (std::sin(pose.heading) - std::sin(p.start_heading));
      pose.y -= dir * p.radius * (std::cos(pose.heading) - std::cos(p.start_heading));
      apply_gait(pose, t, p.speed / 1.2, 0.25 + 0.12 * p.speed);
      break;
    }
    case SynthKind::TurnLeft:
    case SynthKind::TurnRight: {
      const double dir = p.kind == SynthKind::TurnLeft ? 1.0 : -1.0;
      pose.heading = p.start_heading + dir * p.turn_angle * smoothstep(s);
      apply_gait(pose, t, 1.0, 0.12);
      break;
    }
    case SynthKind::RaiseArm: {
      const double lift = 2.6 * std::sin(kPi * s);
      if (p.arm != ArmSide::Right) pose.arm[0] = lift;
      if (p.arm != ArmSide::Left) pose.arm[1] = lift;
      break;
    }
    case SynthKind::Crouch: {
      pose.drop = p.depth * std::pow(std::sin(kPi * s), 2);
      pose.arm[0] = pose.arm[1] = 1.2 * pose.drop / p.depth;
      break;
    }
  }
  return pose;
}

Eigen::Vector3d limb_dir(double angle) { return {std::sin(angle), 0.0, -std::cos(angle)}; }

void write_pose(const Pose& pose, motion::MotionSequence& m, std::size_t f) {
  // Body-local positions: facing +X, left side toward -Y.
  Eigen::Vector3d local[motion::kMmmJointCount];
  const Eigen::Vector3d root(0.0, 0.0, kPelvisHeight - pose.drop);
  local[0] = root;
  local[1] = root + Eigen::Vector3d(0, 0, 0.10);
  local[2] = root + Eigen::Vector3d(0, 0, 0.30);
  local[3] = root + Eigen::Vector3d(0, 0, 0.50);
  local[4] = root + Eigen::Vector3d(0.02, 0, 0.65);
  for (int side = 0; side < 2; ++side) {
    const double y = side == 0 ? -1.0 : 1.0;
    const std::size_t shoulder = side == 0 ? 5 : 8;
    local[shoulder] = root + Eigen::Vector3d(0, 0.18 * y, 0.47);
    local[shoulder + 1] = local[shoulder] + kUpperArm * limb_dir(pose.arm[side]);
    local[shoulder + 2] = local[shoulder + 1] + kForearm * limb_dir(pose.arm[side] + pose.elbow[side]);

    const std::size_t hip = side == 0 ? 11 : 16;
    // Crouching bends thigh and shin symmetrically so the ankle stays put.
    const double reach = kThigh + kShin - pose.drop;
    const double bend = std::acos(std::clamp(reach / (kThigh + kShin), -1.0, 1.0));
    const double thigh = pose.leg[side] + bend;
    const double shin = thigh - pose.knee[side] - 2.0 * bend;
    local[hip] = root + Eigen::Vector3d(0, 0.09 * y, -0.03);
    local[hip + 1] = local[hip] + kThigh * limb_dir(thigh);
    local[hip + 2] = local[hip + 1] + kShin * limb_dir(shin);
    local[hip + 3] = local[hip + 2] + Eigen::Vector3d(-0.04, 0, -0.06);
    local[hip + 4] = local[hip + 2] + Eigen::Vector3d(0.14, 0, -0.06);
  }
  const Eigen::Matrix3d r = motion::rotation_z(pose.heading);
  const Eigen::Vector3d offset(pose.x, pose.y, 0.0);
  for (std::size_t j = 0; j < motion::kMmmJointCount; ++j) m.at(f, j) = offset + r * local[j];
}

std::vector<std::string> templates(const SynthParams& p) {
  switch (p.kind) {
    case SynthKind::WalkStraight:
      if (p.speed < 0.9)
        return {"a person walks forward slowly", "someone slowly walks straight ahead", "a person takes a few slow steps forward"};
      if (p.speed > 1.3)
        return {"a person walks forward quickly", "someone walks fast in a straight line", "a person briskly walks ahead"};
      return {"a person walks forward", "someone walks straight ahead", "a human walks forward in a straight line"};
    case SynthKind::WalkCircle:
      if (p.clockwise)
        return {"a person walks in a circle clockwise", "someone walks around in a clockwise circle", "a human walks in a circle to the right"};
      return {"a person walks in a circle counterclockwise", "someone walks around in a counterclockwise circle", "a human walks in a circle to the left"};
    case SynthKind::TurnLeft:
      if (p.turn_angle > 2.6) return {"a person turns around to the left", "someone turns all the way around to their left"};
      return {"a person turns left", "someone turns to the left", "a human rotates to face left"};
    case SynthKind::TurnRight:
      if (p.turn_angle > 2.6) return {"a person turns around to the right", "someone turns all the way around to their right"};
      return {"a person turns right", "someone turns to the right", "a human rotates to face right"};
    case SynthKind::RaiseArm:
      if (p.arm == ArmSide::Left) return {"a person raises the left arm", "someone lifts their left arm up and lowers it", "a human raises the left hand"};
      if (p.arm == ArmSide::Right) return {"a person raises the right arm", "someone lifts their right arm up and lowers it", "a human raises the right hand"};
      return {"a person raises both arms", "someone lifts both arms up and lowers them", "a human raises both hands"};
    case SynthKind::Crouch:
      return {"a person squats down and stands back up", "someone crouches down then rises", "a human bends the knees and stands up again"};
  }
  return {};
}

}  // namespace

std::string_view to_string(SynthKind k) {
  switch (k) {
    case SynthKind::WalkStraight:
      return "walk_straight";
    case SynthKind::WalkCircle:
      return "walk_circle";
    case SynthKind::TurnLeft:
      return "turn_left";
    case SynthKind::TurnRight:
      return "turn_right";
    case SynthKind::RaiseArm:
      return "raise_arm";
    case SynthKind::Crouch:
      return "crouch";
  }
  return "?";
}

motion::MotionSequence synth_motion(const SynthParams& p) {
  if (p.frames < 2) throw InvalidArgument("synth_motion: need at least 2 frames");
  const std::size_t frames = (p.frames - 1) * kUpsample + 1;
  const double fps = kModelFps * static_cast<double>(kUpsample);
  const double duration = static_cast<double>(frames - 1) / fps;
  auto m = motion::MotionSequence::zeros(frames, motion::kMmmJointCount, fps);
  for (std::size_t f = 0; f < frames; ++f) write_pose(pose_at(p, static_cast<double>(f) / fps, duration), m, f);
  return m;
}

double synth_swept_angle(const SynthParams& p) {
  const double duration = static_cast<double>(p.frames - 1) / kModelFps;
  switch (p.kind) {
    case SynthKind::WalkCircle:
      return (p.clockwise ? -1.0 : 1.0) * p.speed / p.radius * duration;
    case SynthKind::TurnLeft:
      return p.turn_angle;
    case SynthKind::TurnRight:
      return -p.turn_angle;
    default:
      return 0.0;
  }
}

std::vector<std::string> synth_descriptions(const SynthParams& p, std::mt19937_64& rng) {
  auto pool = templates(p);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::uniform_int_distribution<std::size_t> count(1, std::min<std::size_t>(3, pool.size()));
  pool.resize(count(rng));
  return pool;
}

std::vector<SynthParams> synth_params(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw InvalidArgument("synth: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> frames(20, 120);
  std::vector<SynthParams> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    SynthParams& p = out[i];
    p.kind = static_cast<SynthKind>(i % kSynthKindCount);
    p.frames = frames(rng);
    p.start_heading = kPi * (2.0 * u(rng) - 1.0);
    p.start_x = 4.0 * u(rng) - 2.0;
    p.start_y = 4.0 * u(rng) - 2.0;
    p.speed = 0.6 + u(rng);
    p.radius = 1.0 + 1.5 * u(rng);
    p.clockwise = u(rng) < 0.5;
    p.turn_angle = kPi / 3.0 + (2.0 * kPi / 3.0) * u(rng);
    p.arm = static_cast<ArmSide>(std::min(2, static_cast<int>(3.0 * u(rng))));
    p.depth = 0.2 + 0.2 * u(rng);
  }
  return out;
}

std::vector<DatasetEntry> synth_corpus(std::uint64_t seed, std::size_t n) {
  const auto params = synth_params(seed, n);
  std::mt19937_64 text_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<DatasetEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DatasetEntry e;
    std::ostringstream id;
    id << "synth_" << std::setw(5) << std::setfill('0') << i;
    e.id = id.str();
    e.split = i % 10 == 8 ? Split::Val : (i % 10 == 9 ? Split::Test : Split::Train);
    e.joints = synth_motion(params[i]);
    e.features = skeleton_features(e.joints);
    for (auto& text : synth_descriptions(params[i], text_rng)) e.descriptions.push_back({std::move(text), {}});
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace temos::data
