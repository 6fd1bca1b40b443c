#pragma once

// Post-norm Transformer building blocks on top of the differentiable ops.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "temos/errors.hpp"
#include "temos/nn/mask.hpp"
#include "temos/nn/ops.hpp"
#include "temos/nn/tensor.hpp"

namespace temos::nn {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

// Training switch plus the dropout stream. Evaluation mode never touches rng.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;

  static ForwardContext eval() { return {}; }
};

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, const ForwardContext& ctx) {
  if (!ctx.training || ctx.dropout <= 0.0) return x;
  if (ctx.rng == nullptr) throw InvalidArgument("dropout: training context without rng");
  const T keep = T(1.0 - ctx.dropout);
  std::bernoulli_distribution draw(1.0 - ctx.dropout);
  std::vector<T> m(x.numel());
  for (auto& v : m) v = draw(*ctx.rng) ? T(1) / keep : T(0);
  return mul_constant(x, std::move(m));
}

// PE[f, 2i] = sin(f / 10000^(2i/d)), PE[f, 2i+1] = cos(f / 10000^(2i/d)).
template <typename T>
Tensor<T> sinusoidal_pe(std::size_t length, std::size_t d) {
  if (d % 2 != 0) throw InvalidArgument("sinusoidal_pe: dimension " + std::to_string(d) + " is odd");
  std::vector<T> v(length * d);
  for (std::size_t f = 0; f < length; ++f) {
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle = static_cast<double>(f) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
      v[f * d + 2 * i] = static_cast<T>(std::sin(angle));
      v[f * d + 2 * i + 1] = static_cast<T>(std::cos(angle));
    }
  }
  return Tensor<T>::from({length, d}, std::move(v));
}

template <typename T>
Tensor<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<T> w(fan_in * fan_out);
  for (auto& x : w) x = static_cast<T>(u(rng));
  return Tensor<T>::from({fan_in, fan_out}, std::move(w), true);
}

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng)
      : weight(xavier_uniform<T>(in, out, rng)), bias(Tensor<T>::zeros({out}, true)) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
  }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t d) : gain(Tensor<T>::full({d}, T(1))), bias(Tensor<T>::zeros({d}, true)) {
    gain.node()->requires_grad = true;
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gain, bias); }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    out.push_back({prefix + ".gain", gain});
    out.push_back({prefix + ".bias", bias});
  }
};

template <typename T>
struct MultiHeadAttention {
  Linear<T> q_proj, k_proj, v_proj, out_proj;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t d, std::size_t heads_, std::mt19937_64& rng)
      : q_proj(d, d, rng), k_proj(d, d, rng), v_proj(d, d, rng), out_proj(d, d, rng), heads(heads_) {
    if (heads == 0 || d % heads != 0) {
      throw InvalidArgument("multi-head attention: dim " + std::to_string(d) + " not divisible by " +
                            std::to_string(heads) + " heads");
    }
  }

  // query [B,Lq,D], kv [B,Lk,D], key_mask [B,Lk]
  Tensor<T> operator()(const Tensor<T>& query, const Tensor<T>& kv, const AttentionMask& key_mask) const {
    return out_proj(attention(q_proj(query), k_proj(kv), v_proj(kv), key_mask, heads));
  }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    q_proj.collect(out, prefix + ".q");
    k_proj.collect(out, prefix + ".k");
    v_proj.collect(out, prefix + ".v");
    out_proj.collect(out, prefix + ".out");
  }
};

template <typename T>
struct FeedForward {
  Linear<T> up, down;

  FeedForward() = default;
  FeedForward(std::size_t d, std::size_t ff, std::mt19937_64& rng) : up(d, ff, rng), down(ff, d, rng) {}

  Tensor<T> operator()(const Tensor<T>& x, const ForwardContext& ctx) const {
    return down(dropout(gelu(up(x)), ctx));
  }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    up.collect(out, prefix + ".up");
    down.collect(out, prefix + ".down");
  }
};

struct StackConfig {
  std::size_t dim = 256;
  std::size_t layers = 6;
  std::size_t heads = 4;
  std::size_t ff_dim = 1024;
};

template <typename T>
struct EncoderLayer {
  MultiHeadAttention<T> self_attn;
  LayerNorm<T> norm1, norm2;
  FeedForward<T> ff;

  EncoderLayer() = default;
  EncoderLayer(const StackConfig& c, std::mt19937_64& rng)
      : self_attn(c.dim, c.heads, rng), norm1(c.dim), norm2(c.dim), ff(c.dim, c.ff_dim, rng) {}

  Tensor<T> operator()(const Tensor<T>& x, const AttentionMask& mask, const ForwardContext& ctx) const {
    Tensor<T> h = norm1(add(x, dropout(self_attn(x, x, mask), ctx)));
    return norm2(add(h, dropout(ff(h, ctx), ctx)));
  }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    self_attn.collect(out, prefix + ".self_attn");
    norm1.collect(out, prefix + ".norm1");
    norm2.collect(out, prefix + ".norm2");
    ff.collect(out, prefix + ".ff");
  }
};

template <typename T>
struct DecoderLayer {
  MultiHeadAttention<T> self_attn, cross_attn;
  LayerNorm<T> norm1, norm2, norm3;
  FeedForward<T> ff;

  DecoderLayer() = default;
  DecoderLayer(const StackConfig& c, std::mt19937_64& rng)
      : self_attn(c.dim, c.heads, rng),
        cross_attn(c.dim, c.heads, rng),
        norm1(c.dim),
        norm2(c.dim),
        norm3(c.dim),
        ff(c.dim, c.ff_dim, rng) {}

  Tensor<T> operator()(const Tensor<T>& x, const Tensor<T>& memory, const AttentionMask& query_mask,
                       const AttentionMask& memory_mask, const ForwardContext& ctx) const {
    Tensor<T> h = norm1(add(x, dropout(self_attn(x, x, query_mask), ctx)));
    h = norm2(add(h, dropout(cross_attn(h, memory, memory_mask), ctx)));
    return norm3(add(h, dropout(ff(h, ctx), ctx)));
  }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    self_attn.collect(out, prefix + ".self_attn");
    cross_attn.collect(out, prefix + ".cross_attn");
    norm1.collect(out, prefix + ".norm1");
    norm2.collect(out, prefix + ".norm2");
    norm3.collect(out, prefix + ".norm3");
    ff.collect(out, prefix + ".ff");
  }
};

inline void check_mask_matches(const Shape& shape, const AttentionMask& mask, const char* who) {
  if (shape.size() != 3 || mask.batch != shape[0] || mask.length != shape[1]) {
    throw InvalidArgument(std::string(who) + ": mask " + std::to_string(mask.batch) + "x" +
                          std::to_string(mask.length) + " does not match input " + shape_str(shape));
  }
}

// Input must already be embedded and position-encoded.
template <typename T>
struct EncoderStack {
  std::vector<EncoderLayer<T>> layers;

  EncoderStack() = default;
  EncoderStack(const StackConfig& c, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < c.layers; ++i) layers.emplace_back(c, rng);
  }

  Tensor<T> operator()(const Tensor<T>& x, const AttentionMask& mask, const ForwardContext& ctx) const {
    check_mask_matches(x.shape(), mask, "encoder stack");
    Tensor<T> h = x;
    for (const auto& layer : layers) h = layer(h, mask, ctx);
    return h;
  }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".layer" + std::to_string(i));
  }
};

// Non-causal: every valid query attends to every valid query.
template <typename T>
struct DecoderStack {
  std::vector<DecoderLayer<T>> layers;

  DecoderStack() = default;
  DecoderStack(const StackConfig& c, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < c.layers; ++i) layers.emplace_back(c, rng);
  }

  Tensor<T> operator()(const Tensor<T>& queries, const Tensor<T>& memory, const AttentionMask& query_mask,
                       const AttentionMask& memory_mask, const ForwardContext& ctx) const {
    if (queries.rank() != 3 || queries.dim(1) == 0) throw InvalidArgument("decoder stack: empty query sequence");
    if (memory.rank() != 3 || memory.dim(1) == 0) throw InvalidArgument("decoder stack: empty memory");
    check_mask_matches(queries.shape(), query_mask, "decoder stack (queries)");
    check_mask_matches(memory.shape(), memory_mask, "decoder stack (memory)");
    Tensor<T> h = queries;
    for (const auto& layer : layers) h = layer(h, memory, query_mask, memory_mask, ctx);
    return h;
  }

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".layer" + std::to_string(i));
  }
};

}  // namespace temos::nn
