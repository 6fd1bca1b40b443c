#pragma once

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "temos/data/dataset.hpp"
#include "temos/model/batch.hpp"
#include "temos/model/temos.hpp"
#include "temos/nn/adamw.hpp"
#include "temos/train/config.hpp"

namespace temos::train {

using Model = model::TemosModel<float>;

struct PreparedData {
  data::Vocabulary vocab;
  motion::StandardizationStats stats;  // rounded to f32 so checkpoints reproduce them exactly
  std::vector<data::DatasetEntry> train;
  std::vector<data::DatasetEntry> val;
  std::size_t dropped_long = 0;
};

// Vocabulary and statistics come from the training split alone. Training
// entries longer than max_train_frames are dropped; validation keeps all.
PreparedData prepare_data(std::vector<data::DatasetEntry> entries, const TrainConfig& cfg);

// Pads to the longest member, builds masks and standardizes. Entries longer
// than max_frames (when nonzero) are left out; throws InvalidArgument when
// none remain or a chosen description has no tokens.
model::Batch make_batch(std::span<const data::DatasetEntry* const> entries, const motion::StandardizationStats& stats,
                        data::DescriptionMode mode, std::mt19937_64& rng, std::size_t max_frames = 0);

// Masked text-branch reconstruction loss with z = mu, eval mode and the first
// description of every entry. NaN for an empty set.
double text_reconstruction_loss(const Model& model, const std::vector<data::DatasetEntry>& entries,
                                const motion::StandardizationStats& stats, std::size_t batch_size);

struct Checkpoint {
  TrainConfig config;
  data::Vocabulary vocab;
  motion::StandardizationStats stats;
  Model model;
  nn::AdamWState<float> optimizer;
  std::size_t epoch = 0;
  double best_val = std::numeric_limits<double>::quiet_NaN();
};

// "TEMOSCK1", u32 version, u64 header length, JSON header, then one TMF1
// matrix per parameter, the same again for both Adam moments, and a 2 x p
// matrix holding the standardization mean and std.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);  // throws DataError

struct EpochMetrics {
  std::size_t epoch = 0;
  double recon = 0.0;       // L_R
  double kl = 0.0;          // L_KL, unweighted
  double embedding = 0.0;   // L_E, unweighted
  double total = 0.0;
  double recon_text = 0.0;  // text-branch part of L_R
  double val_recon = std::numeric_limits<double>::quiet_NaN();
};

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::vector<data::DatasetEntry> entries);

  // One pass over the shuffled training set followed by validation.
  EpochMetrics run_epoch();
  double validation_loss() const;

  Checkpoint checkpoint() const;
  const Model& model() const { return model_; }
  const PreparedData& data() const { return data_; }
  const TrainConfig& config() const { return cfg_; }
  std::size_t epoch() const { return epoch_; }
  double best_val() const { return best_val_; }
  void set_best_val(double v) { best_val_ = v; }
  const std::mt19937_64& z_rng() const { return z_rng_; }

 private:
  TrainConfig cfg_;
  PreparedData data_;
  Model model_;
  nn::ParameterList<float> params_;
  nn::AdamWState<float> opt_;
  std::mt19937_64 order_rng_, text_rng_, z_rng_, dropout_rng_;
  std::size_t epoch_ = 0;
  double best_val_ = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;  // empty without validation data
};

// Writes metrics.csv (epoch,L_R,L_KL,L_E,total,val_L_R), final.ckpt, best.ckpt
// and epoch_NNNN.ckpt every checkpoint_every epochs. A non-finite loss saves
// the last good weights as last_good.ckpt and rethrows.
TrainResult train(const TrainConfig& cfg, std::vector<data::DatasetEntry> entries, const std::filesystem::path& out_dir,
                  std::ostream* log = nullptr);

}  // namespace temos::train
