#pragma once

// TMF1 matrix container: 8-byte magic "TMF1\0\0\0\0", little-endian u32 rows,
// u32 cols, then rows*cols little-endian f32 values, row-major.
//
// Joint files use cols = joints * 3 (x, y, z per joint); feature files use
// cols = feature width. Stats files are headerless: u32 p, p means, p stds.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "temos/motion/codecs.hpp"
#include "temos/motion/types.hpp"

namespace temos::motion {

inline constexpr char kTmfMagic[8] = {'T', 'M', 'F', '1', '\0', '\0', '\0', '\0'};

struct TmfMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;
};

void write_tmf(std::ostream& os, const TmfMatrix& m);
TmfMatrix read_tmf(std::istream& is);  // throws DataError
void write_tmf_file(const std::filesystem::path& path, const TmfMatrix& m);
TmfMatrix read_tmf_file(const std::filesystem::path& path);

TmfMatrix to_tmf(const MotionSequence& m);
MotionSequence motion_from_tmf(const TmfMatrix& t, double fps, JointSet set = JointSet::MMM21);
TmfMatrix to_tmf(const FeatureSequence& f);
FeatureSequence features_from_tmf(const TmfMatrix& t, double fps = 12.5);

void write_stats_file(const std::filesystem::path& path, const StandardizationStats& stats);
StandardizationStats read_stats_file(const std::filesystem::path& path);

// Little-endian scalar helpers shared by the other binary formats.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);

}  // namespace temos::motion
