#pragma once

// Differentiable ops over Tensor<T>. Each op computes its forward value
// eagerly and, when an input requires a gradient, records a closure that
// accumulates vector-Jacobian products into its inputs.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "temos/errors.hpp"
#include "temos/nn/kernels.hpp"
#include "temos/nn/mask.hpp"
#include "temos/nn/tensor.hpp"

namespace temos::nn {

namespace detail {

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <typename T>
std::span<T> parent_grad(Node<T>& self, std::size_t i) {
  return self.parents[i]->grad;
}

template <typename T>
bool wants_grad(const Node<T>& self, std::size_t i) {
  return self.parents[i]->requires_grad;
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!detail::wants_grad(self, p)) continue;
      auto g = detail::parent_grad(self, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node<T>& self) {
    if (detail::wants_grad(self, 0)) {
      auto g = detail::parent_grad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (detail::wants_grad(self, 1)) {
      auto g = detail::parent_grad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node<T>& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (detail::wants_grad(self, 0)) {
      auto g = detail::parent_grad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (detail::wants_grad(self, 1)) {
      auto g = detail::parent_grad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * s;
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr()}, [s](Node<T>& self) {
    auto g = detail::parent_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
  });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr()}, [](Node<T>& self) {
    auto g = detail::parent_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i];
  });
}

// Exact (erf) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = a.values()[i];
    out[i] = T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2));
  }
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr()}, [inv_sqrt2](Node<T>& self) {
    const T inv_sqrt_2pi = inv_sqrt2 * std::numbers::inv_sqrtpi_v<T>;
    const auto& xv = self.parents[0]->value;
    auto g = detail::parent_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T x = xv[i];
      const T cdf = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
      g[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = T(0);
  for (T v : a.values()) acc += v;
  return make_result<T>({}, {acc}, {a.node_ptr()}, [](Node<T>& self) {
    auto g = detail::parent_grad(self, 0);
    for (auto& gi : g) gi += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.numel() == 0) throw InvalidArgument("mean: empty tensor");
  return scale(sum(a), T(1) / T(a.numel()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw InvalidArgument("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  return make_result<T>(std::move(shape), std::vector<T>(a.values().begin(), a.values().end()), {a.node_ptr()},
                        [](Node<T>& self) {
                          auto g = detail::parent_grad(self, 0);
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

// x[..., in] W[in, out] + b[out]. `b` may be undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (w.rank() != 2 || x.rank() == 0 || x.shape().back() != w.dim(0)) {
    throw InvalidArgument("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                          shape_str(w.shape()));
  }
  const std::size_t in = w.dim(0), out_dim = w.dim(1), rows = x.numel() / in;
  const bool has_bias = b.defined();
  if (has_bias && (b.rank() != 1 || b.dim(0) != out_dim)) throw InvalidArgument("linear: bias shape");
  Shape shape = x.shape();
  shape.back() = out_dim;
  std::vector<T> y(rows * out_dim);
  kernels::parallel::matmul<T>(x.values(), w.values(), has_bias ? b.values() : std::span<const T>{}, y, rows, in,
                               out_dim);
  std::vector<std::shared_ptr<Node<T>>> parents{x.node_ptr(), w.node_ptr()};
  if (has_bias) parents.push_back(b.node_ptr());
  return make_result<T>(std::move(shape), std::move(y), std::move(parents),
                        [rows, in, out_dim, has_bias](Node<T>& self) {
                          const auto& xv = self.parents[0]->value;
                          const auto& wv = self.parents[1]->value;
                          if (detail::wants_grad(self, 0)) {
                            kernels::parallel::matmul_grad_input<T>(self.grad, wv, detail::parent_grad(self, 0),
                                                                    rows, in, out_dim);
                          }
                          const bool gw = detail::wants_grad(self, 1);
                          const bool gb = has_bias && detail::wants_grad(self, 2);
                          if (gw) {
                            kernels::parallel::matmul_grad_weight<T>(
                                xv, self.grad, detail::parent_grad(self, 1),
                                gb ? detail::parent_grad(self, 2) : std::span<T>{}, rows, in, out_dim);
                          } else if (gb) {
                            auto db = detail::parent_grad(self, 2);
                            for (std::size_t i = 0; i < rows; ++i)
                              for (std::size_t j = 0; j < out_dim; ++j) db[j] += self.grad[i * out_dim + j];
                          }
                        });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5)) {
  const std::size_t n = x.shape().back();
  if (gain.numel() != n || bias.numel() != n) throw InvalidArgument("layer_norm: gain/bias size mismatch");
  const std::size_t rows = x.numel() / n;
  std::vector<T> y(x.numel()), mu(rows), rstd(rows);
  kernels::parallel::layer_norm_forward<T>(x.values(), gain.values(), bias.values(), rows, n, eps, y, mu, rstd);
  return make_result<T>(
      x.shape(), std::move(y), {x.node_ptr(), gain.node_ptr(), bias.node_ptr()},
      [rows, n, mu = std::move(mu), rstd = std::move(rstd)](Node<T>& self) {
        std::vector<T> dx_scratch, dg_scratch, db_scratch;
        auto pick = [&](std::size_t i, std::vector<T>& scratch, std::size_t size) -> std::span<T> {
          if (detail::wants_grad(self, i)) return detail::parent_grad(self, i);
          scratch.assign(size, T(0));
          return scratch;
        };
        auto dx = pick(0, dx_scratch, rows * n);
        auto dg = pick(1, dg_scratch, n);
        auto db = pick(2, db_scratch, n);
        kernels::parallel::layer_norm_backward<T>(self.parents[0]->value, self.parents[1]->value, mu, rstd,
                                                  self.grad, rows, n, dx, dg, db);
      });
}

// Scaled dot-product attention over pre-projected q [B,Lq,D], k/v [B,Lk,D].
// `key_mask` is [B,Lk]; masked keys receive exactly zero weight.
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, const AttentionMask& key_mask,
                    std::size_t heads) {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3) throw InvalidArgument("attention: expected rank-3 inputs");
  detail::require_same_shape(k.shape(), v.shape(), "attention(k, v)");
  kernels::AttentionDims d{q.dim(0), q.dim(1), k.dim(1), q.dim(2), heads};
  if (k.dim(0) != d.batch || k.dim(2) != d.model_dim) throw InvalidArgument("attention: q/k batch or width mismatch");
  if (heads == 0 || d.model_dim % heads != 0) {
    throw InvalidArgument("attention: model dim " + std::to_string(d.model_dim) + " not divisible by " +
                          std::to_string(heads) + " heads");
  }
  if (key_mask.batch != d.batch || key_mask.length != d.k_len) {
    throw InvalidArgument("attention: mask is " + std::to_string(key_mask.batch) + "x" +
                          std::to_string(key_mask.length) + ", keys are " + std::to_string(d.batch) + "x" +
                          std::to_string(d.k_len));
  }
  key_mask.validate();
  std::vector<T> out(d.batch * d.q_len * d.model_dim);
  std::vector<T> probs(d.batch * heads * d.q_len * d.k_len);
  kernels::parallel::attention_forward<T>(q.values(), k.values(), v.values(), key_mask.valid, d, out, probs);
  return make_result<T>(q.shape(), std::move(out), {q.node_ptr(), k.node_ptr(), v.node_ptr()},
                        [d, probs = std::move(probs)](Node<T>& self) {
                          std::vector<T> scratch[3];
                          std::span<T> grads[3];
                          for (std::size_t i = 0; i < 3; ++i) {
                            if (detail::wants_grad(self, i)) {
                              grads[i] = detail::parent_grad(self, i);
                            } else {
                              scratch[i].assign(self.parents[i]->value.size(), T(0));
                              grads[i] = scratch[i];
                            }
                          }
                          kernels::parallel::attention_backward<T>(self.parents[0]->value, self.parents[1]->value,
                                                                   self.parents[2]->value, probs, self.grad, d,
                                                                   grads[0], grads[1], grads[2]);
                        });
}

// x [B, ...rest] + y [...rest], y broadcast over the leading axis.
template <typename T>
Tensor<T> add_broadcast(const Tensor<T>& x, const Tensor<T>& y) {
  const Shape rest(x.shape().begin() + 1, x.shape().end());
  detail::require_same_shape(rest, y.shape(), "add_broadcast");
  const std::size_t inner = y.numel(), outer = x.dim(0);
  std::vector<T> out(x.numel());
  for (std::size_t b = 0; b < outer; ++b)
    for (std::size_t i = 0; i < inner; ++i) out[b * inner + i] = x.values()[b * inner + i] + y.values()[i];
  return make_result<T>(x.shape(), std::move(out), {x.node_ptr(), y.node_ptr()}, [outer, inner](Node<T>& self) {
    if (detail::wants_grad(self, 0)) {
      auto g = detail::parent_grad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (detail::wants_grad(self, 1)) {
      auto g = detail::parent_grad(self, 1);
      for (std::size_t b = 0; b < outer; ++b)
        for (std::size_t i = 0; i < inner; ++i) g[i] += self.grad[b * inner + i];
    }
  });
}

// x [B,L,D], tokens [N,D] -> [B,N+L,D] with the tokens first in every row.
template <typename T>
Tensor<T> prepend_tokens(const Tensor<T>& x, const Tensor<T>& tokens) {
  if (x.rank() != 3 || tokens.rank() != 2 || tokens.dim(1) != x.dim(2)) {
    throw InvalidArgument("prepend_tokens: " + shape_str(x.shape()) + " with tokens " + shape_str(tokens.shape()));
  }
  const std::size_t B = x.dim(0), L = x.dim(1), D = x.dim(2), N = tokens.dim(0);
  std::vector<T> out(B * (N + L) * D);
  for (std::size_t b = 0; b < B; ++b) {
    std::copy(tokens.values().begin(), tokens.values().end(), out.begin() + b * (N + L) * D);
    std::copy(x.values().begin() + b * L * D, x.values().begin() + (b + 1) * L * D,
              out.begin() + (b * (N + L) + N) * D);
  }
  return make_result<T>({B, N + L, D}, std::move(out), {x.node_ptr(), tokens.node_ptr()},
                        [B, L, D, N](Node<T>& self) {
                          if (detail::wants_grad(self, 0)) {
                            auto g = detail::parent_grad(self, 0);
                            for (std::size_t b = 0; b < B; ++b)
                              for (std::size_t i = 0; i < L * D; ++i) g[b * L * D + i] += self.grad[(b * (N + L) + N) * D + i];
                          }
                          if (detail::wants_grad(self, 1)) {
                            auto g = detail::parent_grad(self, 1);
                            for (std::size_t b = 0; b < B; ++b)
                              for (std::size_t i = 0; i < N * D; ++i) g[i] += self.grad[b * (N + L) * D + i];
                          }
                        });
}

// x [B,L,D] -> x[:, pos, :] as [B,D].
template <typename T>
Tensor<T> select_position(const Tensor<T>& x, std::size_t pos) {
  if (x.rank() != 3 || pos >= x.dim(1)) throw InvalidArgument("select_position: out of range");
  const std::size_t B = x.dim(0), L = x.dim(1), D = x.dim(2);
  std::vector<T> out(B * D);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < D; ++c) out[b * D + c] = x.values()[(b * L + pos) * D + c];
  return make_result<T>({B, D}, std::move(out), {x.node_ptr()}, [B, L, D, pos](Node<T>& self) {
    auto g = detail::parent_grad(self, 0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < D; ++c) g[(b * L + pos) * D + c] += self.grad[b * D + c];
  });
}

// table [V,D], ids [B*N] -> [B,N,D]
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::size_t> ids, std::size_t batch, std::size_t len) {
  if (table.rank() != 2 || ids.size() != batch * len) throw InvalidArgument("embedding: bad shapes");
  const std::size_t V = table.dim(0), D = table.dim(1);
  std::vector<T> out(batch * len * D);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= V) throw InvalidArgument("embedding: id " + std::to_string(ids[i]) + " >= vocabulary size");
    std::copy_n(table.values().begin() + ids[i] * D, D, out.begin() + i * D);
  }
  return make_result<T>({batch, len, D}, std::move(out), {table.node_ptr()},
                        [D, ids = std::vector<std::size_t>(ids.begin(), ids.end())](Node<T>& self) {
                          auto g = detail::parent_grad(self, 0);
                          for (std::size_t i = 0; i < ids.size(); ++i)
                            for (std::size_t c = 0; c < D; ++c) g[ids[i] * D + c] += self.grad[i * D + c];
                        });
}

// Elementwise product with a constant multiplier (dropout masks).
template <typename T>
Tensor<T> mul_constant(const Tensor<T>& x, std::vector<T> multiplier) {
  if (multiplier.size() != x.numel()) throw InvalidArgument("mul_constant: size mismatch");
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * multiplier[i];
  return make_result<T>(x.shape(), std::move(out), {x.node_ptr()}, [m = std::move(multiplier)](Node<T>& self) {
    auto g = detail::parent_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * m[i];
  });
}

// Smooth L1 (Huber with transition `beta`) between a and b, averaged over the
// elements of the rows flagged valid. a, b: [B, L, C] with row_mask [B, L];
// pass an empty mask to average over every element.
template <typename T>
Tensor<T> smooth_l1(const Tensor<T>& a, const Tensor<T>& b, const AttentionMask* row_mask = nullptr,
                    T beta = T(1)) {
  detail::require_same_shape(a.shape(), b.shape(), "smooth_l1");
  const std::size_t n = a.numel();
  std::vector<T> weight(n, T(1));
  if (row_mask != nullptr) {
    if (a.rank() != 3 || row_mask->batch != a.dim(0) || row_mask->length != a.dim(1)) {
      throw InvalidArgument("smooth_l1: mask " + std::to_string(row_mask->batch) + "x" +
                            std::to_string(row_mask->length) + " does not match " + shape_str(a.shape()));
    }
    const std::size_t C = a.dim(2);
    for (std::size_t r = 0; r < a.dim(0) * a.dim(1); ++r)
      if (!row_mask->valid[r])
        for (std::size_t c = 0; c < C; ++c) weight[r * C + c] = T(0);
  }
  T count = T(0);
  for (T w : weight) count += w;
  if (count == T(0)) throw InvalidArgument("smooth_l1: no valid elements");
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (weight[i] == T(0)) continue;
    const T diff = a.values()[i] - b.values()[i];
    const T ad = std::abs(diff);
    acc += ad < beta ? T(0.5) * diff * diff / beta : ad - T(0.5) * beta;
  }
  return make_result<T>({}, {acc / count}, {a.node_ptr(), b.node_ptr()},
                        [weight = std::move(weight), count, beta](Node<T>& self) {
                          const auto& av = self.parents[0]->value;
                          const auto& bv = self.parents[1]->value;
                          const T g0 = self.grad[0] / count;
                          const bool ga = detail::wants_grad(self, 0), gb = detail::wants_grad(self, 1);
                          for (std::size_t i = 0; i < weight.size(); ++i) {
                            if (weight[i] == T(0)) continue;
                            const T diff = av[i] - bv[i];
                            const T d = std::abs(diff) < beta ? diff / beta : (diff > T(0) ? T(1) : T(-1));
                            if (ga) self.parents[0]->grad[i] += g0 * d;
                            if (gb) self.parents[1]->grad[i] -= g0 * d;
                          }
                        });
}

}  // namespace temos::nn
