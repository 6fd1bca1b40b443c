#pragma once

// Motion encoder, text encoder and the shared non-autoregressive motion
// decoder.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "temos/errors.hpp"
#include "temos/model/batch.hpp"
#include "temos/model/loss.hpp"
#include "temos/nn/layers.hpp"

namespace temos::model {

struct ModelConfig {
  std::size_t feature_dim = 64;
  std::size_t vocab_size = 2;
  std::size_t dim = 256;
  std::size_t layers = 6;
  std::size_t heads = 4;
  std::size_t ff_dim = 1024;
  double dropout = 0.1;
  // One embedding token per encoder and no sampling.
  bool deterministic = false;

  nn::StackConfig stack() const { return {dim, layers, heads, ff_dim}; }
  std::size_t distribution_tokens() const { return deterministic ? 1 : 2; }
  void validate() const {
    if (feature_dim == 0 || vocab_size < 2 || dim == 0 || layers == 0 || heads == 0 || ff_dim == 0) {
      throw InvalidArgument("model config: sizes must be positive");
    }
    if (dim % heads != 0) {
      throw InvalidArgument("model config: dim " + std::to_string(dim) + " not divisible by " +
                            std::to_string(heads) + " heads");
    }
    if (dim % 2 != 0) throw InvalidArgument("model config: dim must be even for positional encodings");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidArgument("model config: dropout must be in [0, 1)");
  }
};

// Outputs of one training-style forward pass over both branches.
template <typename T>
struct BranchOutputs {
  LatentDistribution<T> dist_motion, dist_text;
  Tensor<T> z_motion, z_text;
  Tensor<T> h_motion, h_text;  // [B, Fmax, p]
};

template <typename T>
class TemosModel {
 public:
  TemosModel() = default;
  TemosModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const auto stack = cfg_.stack();
    const std::size_t n_tok = cfg_.distribution_tokens();
    motion_in_ = nn::Linear<T>(cfg_.feature_dim, cfg_.dim, rng);
    motion_tokens_ = nn::xavier_uniform<T>(n_tok, cfg_.dim, rng);
    motion_encoder_ = nn::EncoderStack<T>(stack, rng);
    text_embedding_ = nn::xavier_uniform<T>(cfg_.vocab_size, cfg_.dim, rng);
    text_tokens_ = nn::xavier_uniform<T>(n_tok, cfg_.dim, rng);
    text_encoder_ = nn::EncoderStack<T>(stack, rng);
    decoder_ = nn::DecoderStack<T>(stack, rng);
    motion_out_ = nn::Linear<T>(cfg_.dim, cfg_.feature_dim, rng);
  }

  const ModelConfig& config() const { return cfg_; }

  // Stable order; names are checkpoint keys.
  nn::ParameterList<T> parameters() const {
    nn::ParameterList<T> out;
    motion_in_.collect(out, "motion_encoder.input");
    out.push_back({"motion_encoder.tokens", motion_tokens_});
    motion_encoder_.collect(out, "motion_encoder.stack");
    out.push_back({"text_encoder.embedding", text_embedding_});
    out.push_back({"text_encoder.tokens", text_tokens_});
    text_encoder_.collect(out, "text_encoder.stack");
    decoder_.collect(out, "decoder.stack");
    motion_out_.collect(out, "decoder.output");
    return out;
  }

  // features [B, F, p] standardized; mask [B, F].
  LatentDistribution<T> encode_motion(const Tensor<T>& features, const nn::AttentionMask& mask,
                                      const nn::ForwardContext& ctx) const {
    if (features.rank() != 3 || features.dim(2) != cfg_.feature_dim) {
      throw InvalidArgument("encode_motion: expected [B, F, " + std::to_string(cfg_.feature_dim) + "] features, got " +
                            nn::shape_str(features.shape()));
    }
    if (features.dim(1) == 0) throw InvalidArgument("encode_motion: no frames");
    nn::check_mask_matches(features.shape(), mask, "encode_motion");
    Tensor<T> x = nn::add_broadcast(motion_in_(features), nn::sinusoidal_pe<T>(features.dim(1), cfg_.dim));
    return read_distribution(motion_encoder_(nn::prepend_tokens(x, motion_tokens_), mask.with_prefix(n_tokens()), ctx));
  }

  // tokens [B * N] row-major, mask [B, N].
  LatentDistribution<T> encode_text(std::span<const std::size_t> tokens, const nn::AttentionMask& mask,
                                    const nn::ForwardContext& ctx) const {
    if (mask.length == 0) throw InvalidArgument("encode_text: no tokens");
    Tensor<T> x = nn::embedding(text_embedding_, tokens, mask.batch, mask.length);
    x = nn::add_broadcast(x, nn::sinusoidal_pe<T>(mask.length, cfg_.dim));
    return read_distribution(text_encoder_(nn::prepend_tokens(x, text_tokens_), mask.with_prefix(n_tokens()), ctx));
  }

  // z [B, d] -> [B, L, p] with L = max(max(durations), padded_length); rows
  // past each duration are padding.
  Tensor<T> decode(const Tensor<T>& z, std::span<const std::size_t> durations, const nn::ForwardContext& ctx,
                   std::size_t padded_length = 0) const {
    if (z.rank() != 2 || z.dim(1) != cfg_.dim || z.dim(0) != durations.size()) {
      throw InvalidArgument("decode: latent " + nn::shape_str(z.shape()) + " does not match " +
                            std::to_string(durations.size()) + " durations of width " + std::to_string(cfg_.dim));
    }
    std::size_t fmax = padded_length;
    for (std::size_t f : durations) {
      if (f == 0) throw InvalidArgument("decode: duration must be at least 1 frame");
      fmax = std::max(fmax, f);
    }
    const std::size_t batch = durations.size();
    const auto pe = nn::sinusoidal_pe<T>(fmax, cfg_.dim);
    std::vector<T> q(batch * fmax * cfg_.dim);
    for (std::size_t b = 0; b < batch; ++b) std::copy(pe.values().begin(), pe.values().end(), q.begin() + b * pe.numel());
    const auto query_mask = nn::AttentionMask::from_lengths(durations, fmax);
    const Tensor<T> memory = nn::reshape(z, {batch, 1, cfg_.dim});
    const Tensor<T> h = decoder_(Tensor<T>::from({batch, fmax, cfg_.dim}, std::move(q)), memory, query_mask,
                                 nn::AttentionMask::all_valid(batch, 1), ctx);
    return motion_out_(h);
  }

  // Both branches through the shared decoder. `z_rng` supplies the
  // reparameterization noise and is never touched by the deterministic
  // variant.
  BranchOutputs<T> forward(const Batch& batch, const nn::ForwardContext& ctx, std::mt19937_64* z_rng,
                           bool motion_branch = true) const {
    BranchOutputs<T> out;
    out.dist_text = encode_text(batch.tokens, batch.text_mask, ctx);
    out.z_text = sample(out.dist_text, z_rng);
    out.h_text = decode(out.z_text, batch.durations, ctx, batch.max_frames);
    if (motion_branch) {
      out.dist_motion = encode_motion(features_tensor(batch), batch.motion_mask, ctx);
      out.z_motion = sample(out.dist_motion, z_rng);
      out.h_motion = decode(out.z_motion, batch.durations, ctx, batch.max_frames);
    }
    return out;
  }

  LossBreakdown<T> loss(const Batch& batch, const LossConfig& lc, const nn::ForwardContext& ctx,
                        std::mt19937_64* z_rng) const {
    const auto o = forward(batch, ctx, z_rng, lc.motion_encoder);
    return total_loss(features_tensor(batch), batch.motion_mask, o.h_motion, o.h_text, o.dist_text, o.dist_motion,
                      o.z_text, o.z_motion, lc);
  }

  static Tensor<T> features_tensor(const Batch& b) {
    std::vector<T> v(b.features.begin(), b.features.end());
    return Tensor<T>::from({b.size, b.max_frames, b.feature_dim}, std::move(v));
  }

 private:
  std::size_t n_tokens() const { return cfg_.distribution_tokens(); }

  LatentDistribution<T> read_distribution(const Tensor<T>& encoded) const {
    LatentDistribution<T> d;
    d.mu = nn::select_position(encoded, 0);
    if (!cfg_.deterministic) d.log_std = nn::select_position(encoded, 1);
    return d;
  }

  Tensor<T> sample(const LatentDistribution<T>& d, std::mt19937_64* rng) const {
    if (!d.stochastic()) return d.mu;
    if (rng == nullptr) throw InvalidArgument("sampling a latent requires an rng");
    return reparameterize(d, *rng);
  }

  ModelConfig cfg_;
  nn::Linear<T> motion_in_;
  Tensor<T> motion_tokens_;
  nn::EncoderStack<T> motion_encoder_;
  Tensor<T> text_embedding_;
  Tensor<T> text_tokens_;
  nn::EncoderStack<T> text_encoder_;
  nn::DecoderStack<T> decoder_;
  nn::Linear<T> motion_out_;
};

}  // namespace temos::model
