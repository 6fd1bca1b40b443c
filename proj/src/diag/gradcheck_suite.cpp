#include "temos/diag/gradcheck_suite.hpp"

#include <functional>
#include <random>

#include "temos/model/loss.hpp"
#include "temos/model/temos.hpp"
#include "temos/nn/layers.hpp"
#include "temos/nn/ops.hpp"

namespace temos::diag {

namespace {

using nn::Tensor;
using T = Tensor<double>;

struct Check {
  std::string name;
  std::function<nn::GradCheckResult(std::mt19937_64&, const nn::GradCheckOptions&)> run;
};

T random_tensor(nn::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(nn::shape_numel(shape));
  for (auto& x : v) x = n(rng);
  return T::from(std::move(shape), std::move(v), true);
}

// Contracts any output with fixed random weights so every element gets a
// distinct upstream gradient.
T contract(const T& out, const std::vector<double>& w) {
  return nn::sum(nn::mul_constant(out, w));
}

std::vector<double> weights_for(const T& out, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::vector<double> w(out.numel());
  for (auto& x : w) x = n(rng);
  return w;
}

// Builds a check from an op over freshly drawn inputs.
Check unary(std::string name, nn::Shape shape, std::function<T(const T&)> op, double scale = 1.0) {
  return {name, [name, shape, op, scale](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
            T x = random_tensor(shape, rng, scale);
            const auto w = weights_for(op(x), rng);
            return nn::check_gradients(name, {x}, [&] { return contract(op(x), w); }, rng, o);
          }};
}

Check binary(std::string name, nn::Shape a_shape, nn::Shape b_shape, std::function<T(const T&, const T&)> op) {
  return {name, [name, a_shape, b_shape, op](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
            T a = random_tensor(a_shape, rng);
            T b = random_tensor(b_shape, rng);
            const auto w = weights_for(op(a, b), rng);
            return nn::check_gradients(name, {a, b}, [&] { return contract(op(a, b), w); }, rng, o);
          }};
}

nn::AttentionMask ragged_mask() {
  const std::vector<std::size_t> lengths{5, 3};
  return nn::AttentionMask::from_lengths(lengths, 5);
}

std::vector<Check> registry() {
  std::vector<Check> checks;
  checks.push_back(binary("add", {2, 3}, {2, 3}, [](const T& a, const T& b) { return nn::add(a, b); }));
  checks.push_back(binary("sub", {2, 3}, {2, 3}, [](const T& a, const T& b) { return nn::sub(a, b); }));
  checks.push_back(binary("mul", {2, 3}, {2, 3}, [](const T& a, const T& b) { return nn::mul(a, b); }));
  checks.push_back(unary("scale", {4}, [](const T& x) { return nn::scale(x, -1.7); }));
  checks.push_back(unary("exp", {2, 3}, [](const T& x) { return nn::exp(x); }));
  checks.push_back(unary("gelu", {3, 4}, [](const T& x) { return nn::gelu(x); }, 2.0));
  checks.push_back(unary("sum", {3, 2}, [](const T& x) { return nn::mul(nn::sum(x), nn::sum(x)); }));
  checks.push_back(unary("mean", {3, 2}, [](const T& x) { return nn::exp(nn::mean(x)); }));
  checks.push_back(unary("reshape", {2, 6}, [](const T& x) { return nn::reshape(x, {3, 4}); }));
  checks.push_back({"linear", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      T x = random_tensor({2, 3, 4}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({5}, rng);
                      const auto c = weights_for(nn::linear(x, w, b), rng);
                      return nn::check_gradients("linear", {x, w, b}, [&] { return contract(nn::linear(x, w, b), c); },
                                                 rng, o);
                    }});
  checks.push_back({"layer_norm", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      T x = random_tensor({3, 6}, rng), g = random_tensor({6}, rng), b = random_tensor({6}, rng);
                      const auto c = weights_for(nn::layer_norm(x, g, b), rng);
                      return nn::check_gradients("layer_norm", {x, g, b},
                                                 [&] { return contract(nn::layer_norm(x, g, b), c); }, rng, o);
                    }});
  checks.push_back({"attention", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      T q = random_tensor({2, 4, 6}, rng), k = random_tensor({2, 5, 6}, rng),
                        v = random_tensor({2, 5, 6}, rng);
                      const auto mask = ragged_mask();
                      auto f = [&] { return nn::attention(q, k, v, mask, 2); };
                      const auto c = weights_for(f(), rng);
                      return nn::check_gradients("attention", {q, k, v}, [&] { return contract(f(), c); }, rng, o);
                    }});
  checks.push_back(binary("add_broadcast", {3, 2, 4}, {2, 4},
                          [](const T& a, const T& b) { return nn::add_broadcast(a, b); }));
  checks.push_back(binary("prepend_tokens", {2, 3, 4}, {2, 4},
                          [](const T& a, const T& b) { return nn::prepend_tokens(a, b); }));
  checks.push_back(unary("select_position", {2, 3, 4}, [](const T& x) { return nn::select_position(x, 1); }));
  checks.push_back(unary("embedding", {5, 3}, [](const T& x) {
    static const std::vector<std::size_t> ids{0, 4, 4, 2, 1, 3};
    return nn::embedding(x, ids, 2, 3);
  }));
  checks.push_back(unary("mul_constant", {2, 3}, [](const T& x) {
    return nn::mul_constant(x, std::vector<double>{2.0, 0.0, -1.0, 0.5, 1.25, 3.0});
  }));
  checks.push_back({"smooth_l1", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      // Scale 2 puts differences on both sides of the transition point.
                      T a = random_tensor({2, 5, 3}, rng, 2.0), b = random_tensor({2, 5, 3}, rng, 2.0);
                      const auto mask = ragged_mask();
                      return nn::check_gradients("smooth_l1", {a, b}, [&] { return nn::smooth_l1(a, b, &mask); },
                                                 rng, o);
                    }});
  checks.push_back({"encoder_stack", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      nn::StackConfig cfg{8, 2, 2, 16};
                      nn::EncoderStack<double> enc(cfg, rng);
                      T x = random_tensor({2, 5, 8}, rng);
                      const auto mask = ragged_mask();
                      nn::ParameterList<double> params;
                      enc.collect(params, "enc");
                      std::vector<T> inputs{x};
                      for (auto& p : params) inputs.push_back(p.tensor);
                      auto f = [&] { return enc(x, mask, nn::ForwardContext::eval()); };
                      const auto c = weights_for(f(), rng);
                      return nn::check_gradients("encoder_stack", inputs, [&] { return contract(f(), c); }, rng, o);
                    }});
  checks.push_back({"decoder_stack", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      nn::StackConfig cfg{8, 2, 2, 16};
                      nn::DecoderStack<double> dec(cfg, rng);
                      T x = random_tensor({2, 5, 8}, rng), mem = random_tensor({2, 1, 8}, rng);
                      const auto mask = ragged_mask();
                      const auto mem_mask = nn::AttentionMask::all_valid(2, 1);
                      nn::ParameterList<double> params;
                      dec.collect(params, "dec");
                      std::vector<T> inputs{x, mem};
                      for (auto& p : params) inputs.push_back(p.tensor);
                      auto f = [&] { return dec(x, mem, mask, mem_mask, nn::ForwardContext::eval()); };
                      const auto c = weights_for(f(), rng);
                      return nn::check_gradients("decoder_stack", inputs, [&] { return contract(f(), c); }, rng, o);
                    }});
  checks.push_back({"kl_gaussians", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      T ma = random_tensor({3, 4}, rng), la = random_tensor({3, 4}, rng, 0.5),
                        mb = random_tensor({3, 4}, rng), lb = random_tensor({3, 4}, rng, 0.5);
                      return nn::check_gradients("kl_gaussians", {ma, la, mb, lb},
                                                 [&] { return model::kl_gaussians(ma, la, mb, lb); }, rng, o);
                    }});
  checks.push_back({"reparameterize", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      T mu = random_tensor({2, 3}, rng), ls = random_tensor({2, 3}, rng, 0.5);
                      const std::uint64_t noise_seed = rng();
                      auto f = [&] {
                        std::mt19937_64 noise(noise_seed);
                        return model::reparameterize(model::LatentDistribution<double>{mu, ls}, noise);
                      };
                      const auto c = weights_for(f(), rng);
                      return nn::check_gradients("reparameterize", {mu, ls}, [&] { return contract(f(), c); }, rng, o);
                    }});
  checks.push_back({"total_loss", [](std::mt19937_64& rng, const nn::GradCheckOptions& o) {
                      model::ModelConfig cfg;
                      cfg.feature_dim = 5;
                      cfg.vocab_size = 7;
                      cfg.dim = 8;
                      cfg.layers = 1;
                      cfg.heads = 2;
                      cfg.ff_dim = 16;
                      cfg.dropout = 0.0;
                      const model::TemosModel<double> m(cfg, rng());
                      model::Batch batch;
                      batch.size = 2;
                      batch.max_frames = 4;
                      batch.feature_dim = 5;
                      batch.max_tokens = 3;
                      std::normal_distribution<double> n;
                      batch.features.resize(2 * 4 * 5);
                      for (auto& x : batch.features) x = n(rng);
                      batch.durations = {4, 2};
                      batch.motion_mask = nn::AttentionMask::from_lengths(batch.durations, 4);
                      batch.tokens = {2, 5, 6, 3, 1, 0};
                      const std::vector<std::size_t> text_lengths{3, 2};
                      batch.text_mask = nn::AttentionMask::from_lengths(text_lengths, 3);
                      model::LossConfig lc;
                      lc.lambda_kl = 0.5;
                      lc.lambda_e = 0.5;
                      const std::uint64_t noise_seed = rng();
                      auto f = [&] {
                        std::mt19937_64 noise(noise_seed);
                        return m.loss(batch, lc, nn::ForwardContext::eval(), &noise).total;
                      };
                      std::vector<T> inputs;
                      for (auto& p : m.parameters()) inputs.push_back(p.tensor);
                      return nn::check_gradients("total_loss", inputs, f, rng, o);
                    }});
  return checks;
}

}  // namespace

std::vector<std::string> gradcheck_names() {
  std::vector<std::string> names;
  for (const auto& c : registry()) names.push_back(c.name);
  return names;
}

std::vector<nn::GradCheckResult> run_gradchecks(std::uint64_t seed, const nn::GradCheckOptions& options) {
  std::vector<nn::GradCheckResult> out;
  std::mt19937_64 rng(seed);
  for (const auto& c : registry()) out.push_back(c.run(rng, options));
  return out;
}

}  // namespace temos::diag
