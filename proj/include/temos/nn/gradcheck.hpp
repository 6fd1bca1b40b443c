#pragma once

// Central finite-difference check of reverse-mode gradients (double only).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "temos/nn/tensor.hpp"

namespace temos::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so near-zero gradients are
  // compared on an absolute scale.
  double floor = 1e-3;
  // 0 checks every coordinate; otherwise this many random ones per input.
  std::size_t max_coords = 0;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  bool passed = true;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// `loss` rebuilds the scalar from the current values of `inputs`.
inline GradCheckResult check_gradients(const std::string& name, std::vector<Tensor<double>> inputs,
                                       const std::function<Tensor<double>()>& loss, std::mt19937_64& rng,
                                       const GradCheckOptions& opt = {}) {
  for (auto& t : inputs) t.zero_grad();
  backward(loss());
  GradCheckResult r{name, 0.0, 0, true};
  for (auto& t : inputs) {
    std::vector<std::size_t> coords(t.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.max_coords > 0 && coords.size() > opt.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opt.max_coords);
    }
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i : coords) {
      double& x = t.mutable_values()[i];
      const double saved = x;
      x = saved + opt.step;
      const double up = loss().item();
      x = saved - opt.step;
      const double down = loss().item();
      x = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[i], numeric, opt.floor));
      ++r.coords;
    }
  }
  r.passed = r.max_rel_error <= opt.tolerance;
  return r;
}

}  // namespace temos::nn
