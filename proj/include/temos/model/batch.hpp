#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "temos/nn/mask.hpp"

namespace temos::model {

// Padded training batch. Features are standardized, [size x max_frames x dim].
struct Batch {
  std::size_t size = 0;
  std::size_t max_frames = 0;
  std::size_t feature_dim = 0;
  std::size_t max_tokens = 0;
  std::vector<double> features;
  nn::AttentionMask motion_mask;
  std::vector<std::size_t> tokens;  // [size x max_tokens], PAD beyond each length
  nn::AttentionMask text_mask;
  std::vector<std::size_t> durations;
  std::vector<std::string> ids;
};

}  // namespace temos::model
