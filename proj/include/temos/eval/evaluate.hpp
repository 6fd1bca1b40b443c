#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "temos/data/dataset.hpp"
#include "temos/eval/metrics.hpp"
#include "temos/train/trainer.hpp"

namespace temos::eval {

// Text-to-motion generation with a trained checkpoint.
class Generator {
 public:
  explicit Generator(train::Checkpoint ck);

  const train::Checkpoint& checkpoint() const { return ck_; }

  // Throws InvalidArgument when the text has no words.
  model::LatentDistribution<float> encode(std::string_view text) const;

  std::vector<float> mean(const model::LatentDistribution<float>& d) const;
  std::vector<float> zero() const;
  // mu + sigma * eps, eps drawn from rng. The mean for a deterministic model.
  std::vector<float> sample(const model::LatentDistribution<float>& d, std::mt19937_64& rng) const;

  // Decodes `frames` model-rate poses; joints come back at 12.5 Hz, canonical.
  motion::MotionSequence decode(const std::vector<float>& z, std::size_t frames) const;

 private:
  train::Checkpoint ck_;
};

enum class EvalKind { Deterministic, ZZero, SingleRandom, KRandomAvg, KRandomBest };
std::string_view to_string(EvalKind k);
EvalKind eval_kind_from_string(std::string_view name);

struct EvalMode {
  EvalKind kind = EvalKind::SingleRandom;
  std::size_t k = 1;  // used by the k modes
  void validate() const;
  std::size_t samples() const;
};

struct EvalOptions {
  EvalMode mode;
  std::uint64_t seed = 0;
  double target_fps = 100.0;
};

struct EntryResult {
  std::string id;
  MetricReport report;                // what the mode reports for this entry
  std::vector<MetricReport> samples;  // one per generation
  std::size_t chosen = 0;             // best sample for k_random_best
};

struct EvalResult {
  MetricReport summary;  // mean over entries
  std::vector<EntryResult> entries;
};

// Per-entry rng seeded from (seed, id) so results do not depend on order or
// threading.
std::mt19937_64 entry_rng(std::uint64_t seed, std::string_view id);

// Ground truth is brought to `fps` if needed, the prediction is interpolated
// to the same frame count, then both are canonicalized and compared.
MetricReport score(const motion::MotionSequence& gt, const motion::MotionSequence& pred_model_rate, double fps);

// Throws InvalidArgument for SMPL checkpoints and codec mismatches.
EvalResult evaluate(const Generator& gen, const std::vector<data::DatasetEntry>& entries, const EvalOptions& options);

// Index of the lowest root APE among the first k samples.
std::size_t best_of(const std::vector<MetricReport>& samples, std::size_t k);

// Header "id,APE_root,APE_traj,APE_mean_local,APE_mean_global,AVE_root,..."
// then an "ALL" summary row and one row per entry.
void write_report_csv(const std::filesystem::path& path, const EvalResult& result);

}  // namespace temos::eval
