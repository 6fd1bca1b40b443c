#include "temos/motion/tmf.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "temos/errors.hpp"

namespace temos::motion {

namespace {

template <typename U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw DataError("unexpected end of file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
void write_f32(std::ostream& os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }
std::uint32_t read_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get_le<std::uint64_t>(is); }
float read_f32(std::istream& is) { return std::bit_cast<float>(get_le<std::uint32_t>(is)); }

void write_tmf(std::ostream& os, const TmfMatrix& m) {
  if (m.values.size() != static_cast<std::size_t>(m.rows) * m.cols) throw InvalidArgument("tmf: value count mismatch");
  os.write(kTmfMagic, sizeof(kTmfMagic));
  write_u32(os, m.rows);
  write_u32(os, m.cols);
  for (float v : m.values) write_f32(os, v);
}

TmfMatrix read_tmf(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kTmfMagic, sizeof(magic)) != 0) {
    throw DataError("tmf: bad magic");
  }
  TmfMatrix m;
  m.rows = read_u32(is);
  m.cols = read_u32(is);
  const std::size_t n = static_cast<std::size_t>(m.rows) * m.cols;
  if (n > (std::size_t{1} << 31)) throw DataError("tmf: implausible size");
  m.values.resize(n);
  for (auto& v : m.values) v = read_f32(is);
  return m;
}

void write_tmf_file(const std::filesystem::path& path, const TmfMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  write_tmf(os, m);
  if (!os) throw DataError("write failed: " + path.string());
}

TmfMatrix read_tmf_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  try {
    return read_tmf(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

TmfMatrix to_tmf(const MotionSequence& m) {
  TmfMatrix t{static_cast<std::uint32_t>(m.frames), static_cast<std::uint32_t>(m.joints * 3), {}};
  t.values.assign(m.positions.begin(), m.positions.end());
  return t;
}

MotionSequence motion_from_tmf(const TmfMatrix& t, double fps, JointSet set) {
  if (t.cols == 0 || t.cols % 3 != 0) throw DataError("tmf: joint file width " + std::to_string(t.cols) + " is not J*3");
  MotionSequence m = MotionSequence::zeros(t.rows, t.cols / 3, fps, set);
  std::copy(t.values.begin(), t.values.end(), m.positions.begin());
  m.validate();
  return m;
}

TmfMatrix to_tmf(const FeatureSequence& f) {
  TmfMatrix t{static_cast<std::uint32_t>(f.frames), static_cast<std::uint32_t>(f.dim), {}};
  t.values.assign(f.values.begin(), f.values.end());
  return t;
}

FeatureSequence features_from_tmf(const TmfMatrix& t, double fps) {
  FeatureSequence f = FeatureSequence::zeros(t.rows, t.cols, fps);
  std::copy(t.values.begin(), t.values.end(), f.values.begin());
  return f;
}

void write_stats_file(const std::filesystem::path& path, const StandardizationStats& stats) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  write_u32(os, static_cast<std::uint32_t>(stats.dim()));
  for (double v : stats.mean) write_f32(os, static_cast<float>(v));
  for (double v : stats.std) write_f32(os, static_cast<float>(v));
}

StandardizationStats read_stats_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  const std::uint32_t p = read_u32(is);
  StandardizationStats s{std::vector<double>(p), std::vector<double>(p)};
  for (auto& v : s.mean) v = read_f32(is);
  for (auto& v : s.std) v = read_f32(is);
  return s;
}

}  // namespace temos::motion
