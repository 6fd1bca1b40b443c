#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "temos/data/text.hpp"
#include "temos/motion/codecs.hpp"
#include "temos/motion/types.hpp"

namespace temos::data {

enum class Split { Train, Val, Test };
std::string_view to_string(Split s);
Split split_from_string(std::string_view name);

enum class Codec { Skeleton64, Smpl135 };
std::string_view to_string(Codec c);
Codec codec_from_string(std::string_view name);
std::size_t feature_dim(Codec c);

inline constexpr double kModelFps = 12.5;
inline constexpr double kKitFps = 100.0;

// `tokens` in each description are filled in once a vocabulary exists
// (see attach_tokens); loaders and generators leave them empty.
struct DatasetEntry {
  std::string id;
  Split split = Split::Train;
  motion::MotionSequence joints;     // ground truth at the source frame rate
  motion::FeatureSequence features;  // model rate, not standardized
  std::vector<TextSample> descriptions;
};

enum class DescriptionMode { TrainRandom, EvalFirst };

// Throws InvalidArgument when the entry has no descriptions.
const TextSample& select_description(const DatasetEntry& entry, DescriptionMode mode, std::mt19937_64& rng);

// Vocabulary over the training split's descriptions only.
Vocabulary build_vocab(const std::vector<DatasetEntry>& entries);
void attach_tokens(std::vector<DatasetEntry>& entries, const Vocabulary& vocab);

// Resamples to the model rate and encodes with the skeleton codec.
motion::FeatureSequence skeleton_features(const motion::MotionSequence& joints);
// Keeps every k-th pose to reach the model rate and encodes with the SMPL codec.
motion::FeatureSequence smpl_features(const motion::SmplPoseSequence& poses);

// SMPL pose files are TMF1 matrices with 201 columns per frame: 21 body
// rotations and the global rotation as row-major 3x3 blocks, then the root
// translation.
inline constexpr std::size_t kSmplFileColumns = 21 * 9 + 9 + 3;
motion::SmplPoseSequence read_smpl_file(const std::filesystem::path& path, double fps);
void write_smpl_file(const std::filesystem::path& path, const motion::SmplPoseSequence& poses);

struct LoadIssue {
  std::string id;
  std::string message;
};

struct LoadResult {
  std::vector<DatasetEntry> entries;
  std::vector<LoadIssue> skipped;  // missing or unreadable files
  std::vector<LoadIssue> errors;   // malformed annotation or meta JSON
  std::size_t unannotated = 0;
};

struct LoadOptions {
  Codec codec = Codec::Skeleton64;
  // Restricts loading to these ids (in this order) when nonempty.
  std::vector<std::string> ids;
};

// Reads `<root>/splits/{train,val,test}.txt` and, for every listed id,
// `<id>_annotations.json`, `<id>_meta.json` and `<id>_joints.tmf1`
// (or `<id>_smpl.tmf1` for the SMPL codec). Entries come back sorted by id.
LoadResult load_kit(const std::filesystem::path& root, const LoadOptions& options = {});

// Ids listed in one split file, one per line; blank lines ignored.
std::vector<std::string> read_id_list(const std::filesystem::path& file);

// Writes entries in the layout load_kit reads, including the split files.
void write_kit(const std::filesystem::path& root, const std::vector<DatasetEntry>& entries);

}  // namespace temos::data
