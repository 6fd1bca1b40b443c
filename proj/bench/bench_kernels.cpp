#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "temos/nn/kernels.hpp"

namespace k = temos::nn::kernels;

namespace {

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d;
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// rows = batch x frames, square d x d projection
template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0)), d = static_cast<std::size_t>(state.range(1));
  const auto x = random_values(m * d, 1), w = random_values(d * d, 2), b = random_values(d, 3);
  std::vector<float> y(m * d);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::matmul<float>(x, w, b, y, m, d, d);
    else k::reference::matmul<float>(x, w, b, y, m, d, d);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * m * d * d));
}

template <bool Parallel>
void BM_Attention(benchmark::State& state) {
  k::AttentionDims dims{static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(1)), 256, 4};
  const std::size_t n = dims.batch * dims.q_len * dims.model_dim;
  const auto q = random_values(n, 1), kk = random_values(n, 2), v = random_values(n, 3);
  std::vector<std::uint8_t> valid(dims.batch * dims.k_len, 1);
  for (std::size_t b = 0; b < dims.batch; ++b) valid[b * dims.k_len + dims.k_len - 1] = 0;
  std::vector<float> out(n), probs(dims.batch * dims.heads * dims.q_len * dims.k_len);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::attention_forward<float>(q, kk, v, valid, dims, out, probs);
    else k::reference::attention_forward<float>(q, kk, v, valid, dims, out, probs);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_LayerNorm(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0)), d = 256;
  const auto x = random_values(rows * d, 1), g = random_values(d, 2), b = random_values(d, 3);
  std::vector<float> y(rows * d), mean(rows), rstd(rows);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::layer_norm_forward<float>(x, g, b, rows, d, 1e-5f, y, mean, rstd);
    else k::reference::layer_norm_forward<float>(x, g, b, rows, d, 1e-5f, y, mean, rstd);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Name("matmul/reference")->Args({32 * 100, 256})->Args({32 * 100, 1024});
BENCHMARK(BM_Matmul<true>)->Name("matmul/parallel")->Args({32 * 100, 256})->Args({32 * 100, 1024});
BENCHMARK(BM_Attention<false>)->Name("attention/reference")->Args({8, 100})->Args({8, 250});
BENCHMARK(BM_Attention<true>)->Name("attention/parallel")->Args({8, 100})->Args({8, 250});
BENCHMARK(BM_LayerNorm<false>)->Name("layer_norm/reference")->Arg(32 * 100);
BENCHMARK(BM_LayerNorm<true>)->Name("layer_norm/parallel")->Arg(32 * 100);

BENCHMARK_MAIN();
