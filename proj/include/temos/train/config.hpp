#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "temos/data/dataset.hpp"
#include "temos/model/loss.hpp"
#include "temos/model/temos.hpp"

namespace temos::train {

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  double weight_decay = 1e-2;
  double lambda_kl = 1e-5;
  double lambda_e = 1e-5;
  std::size_t layers = 6;
  std::size_t heads = 4;
  std::size_t dim = 256;
  std::size_t ff_dim = 1024;
  double dropout = 0.1;
  std::size_t max_train_frames = 500;
  std::uint64_t seed = 0;
  data::Codec codec = data::Codec::Skeleton64;
  bool deterministic = false;
  std::size_t checkpoint_every = 100;  // 0 = final and best only
  double max_grad_norm = 0.0;          // 0 = no clipping
  bool cross_kl = true;
  bool prior_kl = true;
  bool embedding_loss = true;
  bool motion_encoder = true;

  void validate() const;
  model::LossConfig loss() const;
  model::ModelConfig model(std::size_t vocab_size) const;

  // Flat "key = value" lines; '#' starts a comment.
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
  std::string to_text() const;
  std::vector<std::pair<std::string, std::string>> items() const;
};

}  // namespace temos::train
