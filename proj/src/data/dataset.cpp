#include "temos/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "temos/errors.hpp"
#include "temos/motion/tmf.hpp"

namespace temos::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

std::string_view to_string(Codec c) { return c == Codec::Skeleton64 ? "skeleton64" : "smpl135"; }

Codec codec_from_string(std::string_view name) {
  if (name == "skeleton64") return Codec::Skeleton64;
  if (name == "smpl135") return Codec::Smpl135;
  throw InvalidArgument("unknown codec '" + std::string(name) + "'");
}

std::size_t feature_dim(Codec c) {
  return c == Codec::Skeleton64 ? motion::kSkeletonFeatureDim : motion::kSmplFeatureDim;
}

const TextSample& select_description(const DatasetEntry& entry, DescriptionMode mode, std::mt19937_64& rng) {
  if (entry.descriptions.empty()) throw InvalidArgument("entry " + entry.id + " has no descriptions");
  if (mode == DescriptionMode::EvalFirst) return entry.descriptions.front();
  std::uniform_int_distribution<std::size_t> pick(0, entry.descriptions.size() - 1);
  return entry.descriptions[pick(rng)];
}

Vocabulary build_vocab(const std::vector<DatasetEntry>& entries) {
  std::vector<std::string> corpus;
  for (const auto& e : entries) {
    if (e.split != Split::Train) continue;
    for (const auto& d : e.descriptions) corpus.push_back(d.raw);
  }
  return Vocabulary::build(corpus);
}

void attach_tokens(std::vector<DatasetEntry>& entries, const Vocabulary& vocab) {
  for (auto& e : entries)
    for (auto& d : e.descriptions) d.tokens = tokenize(d.raw, vocab).tokens;
}

motion::FeatureSequence skeleton_features(const motion::MotionSequence& joints) {
  return motion::encode_skeleton(motion::resample(joints, kModelFps));
}

motion::FeatureSequence smpl_features(const motion::SmplPoseSequence& poses) {
  const double ratio = poses.fps / kModelFps;
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9) {
    throw InvalidArgument("smpl_features: " + std::to_string(poses.fps) + " Hz is not an integer multiple of the model rate");
  }
  motion::SmplPoseSequence s;
  s.fps = kModelFps;
  for (std::size_t f = 0; f < poses.frames; f += stride) {
    ++s.frames;
    for (std::size_t j = 0; j < motion::kSmplBodyJoints; ++j) s.body_rots.push_back(poses.body(f, j));
    s.global_rot.push_back(poses.global_rot[f]);
    s.root_trans.push_back(poses.root_trans[f]);
  }
  return motion::encode_smpl(s);
}

motion::SmplPoseSequence read_smpl_file(const fs::path& path, double fps) {
  const auto t = motion::read_tmf_file(path);
  if (t.cols != kSmplFileColumns) {
    throw DataError(path.string() + ": expected " + std::to_string(kSmplFileColumns) + " columns, got " +
                    std::to_string(t.cols));
  }
  auto s = motion::SmplPoseSequence::identity(t.rows, fps);
  auto mat = [&](std::size_t row, std::size_t offset) {
    Eigen::Matrix3d r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = t.values[row * t.cols + offset + static_cast<std::size_t>(i * 3 + j)];
    return r;
  };
  for (std::size_t f = 0; f < t.rows; ++f) {
    for (std::size_t j = 0; j < motion::kSmplBodyJoints; ++j) s.body(f, j) = mat(f, j * 9);
    s.global_rot[f] = mat(f, 189);
    for (int c = 0; c < 3; ++c) s.root_trans[f][c] = t.values[f * t.cols + 198 + static_cast<std::size_t>(c)];
  }
  // float storage: allow for rounding in the rotation check
  s.validate(1e-4);
  return s;
}

void write_smpl_file(const fs::path& path, const motion::SmplPoseSequence& s) {
  motion::TmfMatrix t{static_cast<std::uint32_t>(s.frames), static_cast<std::uint32_t>(kSmplFileColumns), {}};
  t.values.reserve(s.frames * kSmplFileColumns);
  auto put = [&](const Eigen::Matrix3d& r) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.values.push_back(static_cast<float>(r(i, j)));
  };
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t j = 0; j < motion::kSmplBodyJoints; ++j) put(s.body(f, j));
    put(s.global_rot[f]);
    for (int c = 0; c < 3; ++c) t.values.push_back(static_cast<float>(s.root_trans[f][c]));
  }
  motion::write_tmf_file(path, t);
}

std::vector<std::string> read_id_list(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open id list " + file.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids.push_back(line.substr(b, e - b + 1));
  }
  return ids;
}

namespace {

constexpr Split kSplits[] = {Split::Train, Split::Val, Split::Test};

struct Outcome {
  std::optional<DatasetEntry> entry;
  std::optional<LoadIssue> skipped;
  std::optional<LoadIssue> error;
  bool unannotated = false;
};

json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.filename().string());
  std::stringstream ss;
  ss << in.rdbuf();
  return json::parse(ss.str());
}

Outcome load_one(const fs::path& root, const std::string& id, Split split, Codec codec) {
  Outcome out;
  const fs::path ann_path = root / (id + "_annotations.json");
  const fs::path meta_path = root / (id + "_meta.json");
  const fs::path joints_path = root / (id + "_joints.tmf1");
  for (const auto& p : {ann_path, meta_path, joints_path}) {
    if (!fs::exists(p)) {
      out.skipped = LoadIssue{id, "missing " + p.filename().string()};
      return out;
    }
  }

  std::vector<std::string> texts;
  double fps = kKitFps;
  try {
    const json ann = parse_json_file(ann_path);
    if (!ann.is_array()) throw DataError("annotations must be a JSON array of strings");
    for (const auto& a : ann) {
      if (!a.is_string()) throw DataError("annotations must be a JSON array of strings");
      texts.push_back(a.get<std::string>());
    }
    const json meta = parse_json_file(meta_path);
    if (!meta.is_object()) throw DataError("meta must be a JSON object");
    if (meta.contains("fps")) fps = meta.at("fps").get<double>();
    if (meta.contains("joint_set") && meta.at("joint_set").get<std::string>() != "MMM21") {
      throw DataError("unsupported joint set " + meta.at("joint_set").get<std::string>());
    }
  } catch (const json::exception& e) {
    out.error = LoadIssue{id, std::string("malformed JSON: ") + e.what()};
    return out;
  } catch (const DataError& e) {
    out.error = LoadIssue{id, e.what()};
    return out;
  }

  // Descriptions that normalize to nothing cannot be tokenized.
  std::vector<TextSample> descriptions;
  for (auto& t : texts)
    if (!normalize_words(t).empty()) descriptions.push_back({std::move(t), {}});
  if (descriptions.empty()) {
    out.unannotated = true;
    return out;
  }

  try {
    DatasetEntry e;
    e.id = id;
    e.split = split;
    e.joints = motion::motion_from_tmf(motion::read_tmf_file(joints_path), fps);
    if (codec == Codec::Skeleton64) {
      e.features = skeleton_features(e.joints);
    } else {
      const fs::path smpl_path = root / (id + "_smpl.tmf1");
      if (!fs::exists(smpl_path)) {
        out.skipped = LoadIssue{id, "missing " + smpl_path.filename().string()};
        return out;
      }
      e.features = smpl_features(read_smpl_file(smpl_path, fps));
    }
    e.descriptions = std::move(descriptions);
    out.entry = std::move(e);
  } catch (const std::exception& ex) {
    out.skipped = LoadIssue{id, ex.what()};
  }
  return out;
}

}  // namespace

LoadResult load_kit(const fs::path& root, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw DataError("dataset directory not found: " + root.string());
  std::vector<std::pair<std::string, Split>> work;
  std::set<std::string> seen;
  bool any_split = false;
  for (Split s : kSplits) {
    const fs::path file = root / "splits" / (std::string(to_string(s)) + ".txt");
    if (!fs::exists(file)) continue;
    any_split = true;
    for (auto& id : read_id_list(file)) {
      if (!seen.insert(id).second) throw DataError("id " + id + " appears in more than one split");
      work.emplace_back(std::move(id), s);
    }
  }
  if (!any_split) throw DataError("no split files under " + (root / "splits").string());
  std::sort(work.begin(), work.end());
  if (!options.ids.empty()) {
    std::vector<std::pair<std::string, Split>> picked;
    for (const auto& id : options.ids) {
      const auto it = std::find_if(work.begin(), work.end(), [&](const auto& w) { return w.first == id; });
      if (it == work.end()) throw DataError("requested id " + id + " is not in any split");
      picked.push_back(*it);
    }
    work = std::move(picked);
  }

  std::vector<Outcome> outcomes(work.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(work.size()); ++i) {
    const auto& [id, split] = work[static_cast<std::size_t>(i)];
    try {
      outcomes[static_cast<std::size_t>(i)] = load_one(root, id, split, options.codec);
    } catch (const std::exception& e) {
      outcomes[static_cast<std::size_t>(i)].skipped = LoadIssue{id, e.what()};
    }
  }

  LoadResult result;
  for (auto& o : outcomes) {
    if (o.entry) result.entries.push_back(std::move(*o.entry));
    if (o.skipped) {
      std::cerr << "warning: skipping " << o.skipped->id << ": " << o.skipped->message << "\n";
      result.skipped.push_back(std::move(*o.skipped));
    }
    if (o.error) result.errors.push_back(std::move(*o.error));
    if (o.unannotated) ++result.unannotated;
  }
  return result;
}

void write_kit(const fs::path& root, const std::vector<DatasetEntry>& entries) {
  std::error_code ec;
  fs::create_directories(root / "splits", ec);
  if (ec) throw DataError("cannot create " + (root / "splits").string() + ": " + ec.message());
  std::ofstream split_files[3];
  for (Split s : kSplits) {
    auto& f = split_files[static_cast<int>(s)];
    f.open(root / "splits" / (std::string(to_string(s)) + ".txt"));
    if (!f) throw DataError("cannot write split files under " + root.string());
  }
  for (const auto& e : entries) {
    json ann = json::array();
    for (const auto& d : e.descriptions) ann.push_back(d.raw);
    std::ofstream(root / (e.id + "_annotations.json")) << ann.dump(2) << "\n";
    const json meta = {{"fps", e.joints.fps},
                       {"joint_set", std::string(motion::to_string(e.joints.joint_set))},
                       {"nb_frames", e.joints.frames}};
    std::ofstream(root / (e.id + "_meta.json")) << meta.dump(2) << "\n";
    motion::write_tmf_file(root / (e.id + "_joints.tmf1"), motion::to_tmf(e.joints));
    split_files[static_cast<int>(e.split)] << e.id << "\n";
  }
  for (auto& f : split_files) {
    f.flush();
    if (!f) throw DataError("write failed under " + root.string());
  }
}

}  // namespace temos::data
