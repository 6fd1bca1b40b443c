#pragma once

// AdamW with decoupled weight decay and bias correction.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "temos/errors.hpp"
#include "temos/nn/layers.hpp"

namespace temos::nn {

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

template <typename T>
struct AdamWState {
  AdamWOptions options;
  std::size_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

template <typename T>
AdamWState<T> make_adamw_state(const ParameterList<T>& params, AdamWOptions options) {
  AdamWState<T> s;
  s.options = options;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor.numel(), T(0));
    s.v.emplace_back(p.tensor.numel(), T(0));
  }
  return s;
}

// One update from the gradients currently held by `params`.
template <typename T>
void adamw_step(ParameterList<T>& params, AdamWState<T>& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InvalidArgument("adamw: optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = params[i].tensor.grad();
    if (state.m[i].size() != g.size() || state.v[i].size() != g.size()) {
      throw InvalidArgument("adamw: moment shape mismatch for " + params[i].name);
    }
    for (T x : g) {
      if (!std::isfinite(x)) throw NumericalError("adamw: non-finite gradient in parameter " + params[i].name);
    }
  }

  const auto& o = state.options;
  ++state.step;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].tensor.mutable_values();
    const auto g = params[i].tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = static_cast<double>(g[j]);
      double wj = static_cast<double>(w[j]);
      wj -= o.lr * o.weight_decay * wj;
      const double mj = o.beta1 * static_cast<double>(m[j]) + (1.0 - o.beta1) * gj;
      const double vj = o.beta2 * static_cast<double>(v[j]) + (1.0 - o.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      wj -= o.lr * (mj / bc1) / (std::sqrt(vj / bc2) + o.eps);
      w[j] = static_cast<T>(wj);
    }
  }
}

template <typename T>
void zero_grad(ParameterList<T>& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParameterList<T>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params)
    for (T g : p.tensor.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / (norm + 1e-12));
    for (auto& p : params)
      for (auto& g : p.tensor.mutable_grad()) g *= factor;
  }
  return norm;
}

}  // namespace temos::nn
