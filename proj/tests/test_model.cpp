#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "model_support.hpp"
#include "temos/errors.hpp"
#include "temos/model/loss.hpp"
#include "temos/model/temos.hpp"

using namespace temos;
using namespace temos::model;
using TD = nn::Tensor<double>;

namespace {

TD vec(std::size_t b, std::size_t d, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  std::vector<double> v(b * d);
  for (auto& x : v) x = n(rng);
  return TD::from({b, d}, v, true);
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

}  // namespace

TEST_CASE("KL of a distribution with itself is zero") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const TD mu = vec(3, 16, rng), ls = vec(3, 16, rng, 0.7);
    CHECK(std::abs(kl_gaussians(mu, ls, mu, ls).item()) < 1e-10);
  }
}

TEST_CASE("KL of a unit Gaussian against the prior is half the squared mean norm") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const TD mu = vec(1, 32, rng, 2.0);
    double sq = 0.0;
    for (double x : mu.values()) sq += x * x;
    CHECK(std::abs(kl_standard_normal(mu, TD::zeros({1, 32})).item() - sq / 2.0) < 1e-8);
  }
}

TEST_CASE("KL closed form agrees with a Monte-Carlo estimate") {
  std::mt19937_64 rng(3);
  const std::size_t d = 4;
  const TD ma = vec(1, d, rng), la = vec(1, d, rng, 0.3), mb = vec(1, d, rng), lb = vec(1, d, rng, 0.3);
  const double closed = kl_gaussians(ma, la, mb, lb).item();
  std::normal_distribution<double> n;
  const int samples = 1000000;
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    double log_ratio = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double sa = std::exp(la.values()[i]), sb = std::exp(lb.values()[i]);
      const double x = ma.values()[i] + sa * n(rng);
      const double za = (x - ma.values()[i]) / sa, zb = (x - mb.values()[i]) / sb;
      log_ratio += -std::log(sa) - 0.5 * za * za + std::log(sb) + 0.5 * zb * zb;
    }
    acc += log_ratio;
  }
  CHECK(std::abs(acc / samples - closed) < 0.01 * closed);
}

TEST_CASE("reparameterization") {
  std::mt19937_64 rng(4);
  const TD mu = vec(1, 5, rng);
  const TD tiny = TD::full({1, 5}, -1000.0);
  const TD z = reparameterize(LatentDistribution<double>{mu, tiny}, rng);
  CHECK(max_diff(z.values(), mu.values()) == 0.0);

  const TD unit = TD::zeros({1, 5});
  std::vector<double> mean(5, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const TD s = reparameterize(LatentDistribution<double>{mu, unit}, rng);
    for (std::size_t c = 0; c < 5; ++c) mean[c] += s.values()[c] / draws;
  }
  for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(mean[c] - mu.values()[c]) < 0.02);

  // Pathwise gradient: d/dmu sum(z^2) = 2 z, d/dlog_std = 2 z * sigma * eps.
  TD m2 = vec(2, 3, rng), l2 = vec(2, 3, rng, 0.5);
  std::mt19937_64 noise(99);
  const TD zz = reparameterize(LatentDistribution<double>{m2, l2}, noise);
  nn::backward(nn::sum(nn::mul(zz, zz)));
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(m2.grad()[i] == doctest::Approx(2.0 * zz.values()[i]));
    const double sigma_eps = zz.values()[i] - m2.values()[i];
    CHECK(l2.grad()[i] == doctest::Approx(2.0 * zz.values()[i] * sigma_eps));
  }
}

TEST_CASE("encoders produce two d-vectors per item at the default width") {
  ModelConfig cfg;
  cfg.vocab_size = 10;
  const TemosModel<float> m(cfg, 0);
  std::mt19937_64 rng(5);
  std::vector<float> f(2 * 7 * 64);
  std::normal_distribution<float> n;
  for (auto& x : f) x = n(rng);
  const std::vector<std::size_t> lengths{7, 3};
  const auto dist = m.encode_motion(nn::Tensor<float>::from({2, 7, 64}, f),
                                    nn::AttentionMask::from_lengths(lengths, 7), nn::ForwardContext::eval());
  CHECK(dist.mu.shape() == nn::Shape{2, 256});
  CHECK(dist.log_std.shape() == nn::Shape{2, 256});
  CHECK(max_diff(std::vector<double>(dist.mu.values().begin(), dist.mu.values().begin() + 256),
                 std::vector<double>(dist.mu.values().begin() + 256, dist.mu.values().end())) > 1e-3);

  const std::vector<std::size_t> tokens{1, 1, 1, 4, 0, 0};
  const std::vector<std::size_t> tl{3, 1};
  const auto td = m.encode_text(tokens, nn::AttentionMask::from_lengths(tl, 3), nn::ForwardContext::eval());
  CHECK(td.mu.shape() == nn::Shape{2, 256});
  for (float v : td.log_std.values()) CHECK(std::isfinite(v));
}

TEST_CASE("encoders ignore padding beyond the mask") {
  std::mt19937_64 rng(6);
  const auto cfg = test::tiny_config();
  const TemosModel<double> m(cfg, 1);
  const auto a = test::make_test_batch({5, 3}, {{2, 3}, {4, 5, 6}}, 6, rng);
  std::mt19937_64 rng2(6);
  auto b = test::make_test_batch({5, 3}, {{2, 3}, {4, 5, 6}}, 6, rng2, 4, 3);
  // Garbage in padded slots.
  for (std::size_t i = 0; i < b.size; ++i)
    for (std::size_t f = b.durations[i]; f < b.max_frames; ++f)
      for (std::size_t c = 0; c < 6; ++c) b.features[(i * b.max_frames + f) * 6 + c] = 50.0;
  b.tokens[0 * b.max_tokens + 4] = 7;
  const auto ctx = nn::ForwardContext::eval();
  const auto da = m.encode_motion(TemosModel<double>::features_tensor(a), a.motion_mask, ctx);
  const auto db = m.encode_motion(TemosModel<double>::features_tensor(b), b.motion_mask, ctx);
  CHECK(max_diff(da.mu.values(), db.mu.values()) < 1e-12);
  CHECK(max_diff(da.log_std.values(), db.log_std.values()) < 1e-12);
  const auto ta = m.encode_text(a.tokens, a.text_mask, ctx);
  const auto tb = m.encode_text(b.tokens, b.text_mask, ctx);
  CHECK(max_diff(ta.mu.values(), tb.mu.values()) < 1e-12);
}

TEST_CASE("decoder output shape, variable duration and determinism") {
  std::mt19937_64 rng(7);
  const auto cfg = test::tiny_config();
  const TemosModel<double> m(cfg, 2);
  const TD z = vec(1, 8, rng);
  for (std::size_t f : {1u, 30u, 500u}) {
    const std::vector<std::size_t> d{f};
    const auto out = m.decode(z, d, nn::ForwardContext::eval());
    CHECK(out.shape() == nn::Shape{1, f, 6});
  }
  const std::vector<std::size_t> d30{30};
  const auto a = m.decode(z, d30, nn::ForwardContext::eval());
  const auto b = m.decode(z, d30, nn::ForwardContext::eval());
  CHECK(max_diff(a.values(), b.values()) == 0.0);
  const std::vector<std::size_t> zero{0};
  CHECK_THROWS_AS(m.decode(z, zero, nn::ForwardContext::eval()), InvalidArgument);
}

TEST_CASE("decoding a shorter duration in a padded batch leaks nothing") {
  std::mt19937_64 rng(8);
  const TemosModel<double> m(test::tiny_config(), 3);
  const TD z1 = vec(1, 8, rng);
  std::vector<double> zz(z1.values().begin(), z1.values().end());
  zz.insert(zz.end(), z1.values().begin(), z1.values().end());
  const TD z2 = TD::from({2, 8}, zz);
  const std::vector<std::size_t> one{12}, two{12, 20};
  const auto a = m.decode(z1, one, nn::ForwardContext::eval());
  const auto b = m.decode(z2, two, nn::ForwardContext::eval());
  CHECK(max_diff(a.values(), b.values().first(12 * 6)) < 1e-12);
}

TEST_CASE("total loss vanishes at the perfect solution") {
  std::mt19937_64 rng(9);
  const TD h = vec(1, 12, rng);
  const auto h3 = nn::reshape(h, {1, 4, 3});
  const auto mask = nn::AttentionMask::all_valid(1, 4);
  const LatentDistribution<double> psi{TD::zeros({1, 5}), TD::zeros({1, 5})};
  const TD z = vec(1, 5, rng);
  const auto l = total_loss(h3, mask, h3, h3, psi, psi, z, z, LossConfig{});
  CHECK(l.total_value == 0.0);
  CHECK(l.recon == 0.0);
  CHECK(l.kl_total == 0.0);
  CHECK(l.embedding == 0.0);
}

TEST_CASE("total loss is the weighted sum of its reported terms") {
  std::mt19937_64 rng(10);
  const auto h = nn::reshape(vec(2, 12, rng), {2, 4, 3});
  const auto hm = nn::reshape(vec(2, 12, rng), {2, 4, 3});
  const auto ht = nn::reshape(vec(2, 12, rng), {2, 4, 3});
  const std::vector<std::size_t> lengths{4, 2};
  const auto mask = nn::AttentionMask::from_lengths(lengths, 4);
  const LatentDistribution<double> dt{vec(2, 5, rng), vec(2, 5, rng, 0.3)}, dm{vec(2, 5, rng), vec(2, 5, rng, 0.3)};
  const TD zt = vec(2, 5, rng), zm = vec(2, 5, rng);
  LossConfig lc;
  CHECK(lc.lambda_kl == 1e-5);
  CHECK(lc.lambda_e == 1e-5);
  lc.lambda_kl = 0.3;
  lc.lambda_e = 0.7;
  const auto l = total_loss(h, mask, hm, ht, dt, dm, zt, zm, lc);
  CHECK(l.recon == doctest::Approx(l.recon_motion + l.recon_text));
  CHECK(l.kl_total == doctest::Approx(l.kl[0] + l.kl[1] + l.kl[2] + l.kl[3]));
  CHECK(l.total_value == doctest::Approx(l.recon + 0.3 * l.kl_total + 0.7 * l.embedding).epsilon(1e-14));
  CHECK(l.kl[kKlTextMotion] == doctest::Approx(kl_gaussians(dt.mu, dt.log_std, dm.mu, dm.log_std).item()));
  CHECK(l.total_value >= 0.0);

  lc.cross_kl = false;
  const auto nc = total_loss(h, mask, hm, ht, dt, dm, zt, zm, lc);
  CHECK(nc.kl[kKlTextMotion] == 0.0);
  CHECK(nc.kl[kKlMotionText] == 0.0);
  CHECK(nc.kl_total == doctest::Approx(l.kl[kKlTextPrior] + l.kl[kKlMotionPrior]));

  lc.cross_kl = true;
  lc.embedding_loss = false;
  CHECK(total_loss(h, mask, hm, ht, dt, dm, zt, zm, lc).embedding == 0.0);

  lc.embedding_loss = true;
  lc.motion_encoder = false;
  const auto text_only = total_loss(h, mask, TD{}, ht, dt, LatentDistribution<double>{}, zt, TD{}, lc);
  CHECK(text_only.recon == doctest::Approx(l.recon_text));
  CHECK(text_only.kl_total == doctest::Approx(l.kl[kKlTextPrior]));
  CHECK(text_only.embedding == 0.0);
}

TEST_CASE("non-finite loss terms are reported by name") {
  std::mt19937_64 rng(11);
  const auto h = nn::reshape(vec(1, 6, rng), {1, 2, 3});
  std::vector<double> bad(6, 0.0);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  const auto hb = TD::from({1, 2, 3}, bad);
  const auto mask = nn::AttentionMask::all_valid(1, 2);
  const LatentDistribution<double> d{vec(1, 4, rng), vec(1, 4, rng)};
  const TD z = vec(1, 4, rng);
  try {
    total_loss(h, mask, h, hb, d, d, z, z, LossConfig{});
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("text branch") != std::string::npos);
  }
}

TEST_CASE("deterministic variant never samples") {
  std::mt19937_64 rng(12);
  auto cfg = test::tiny_config();
  cfg.deterministic = true;
  const TemosModel<double> m(cfg, 4);
  const auto batch = test::make_test_batch({4, 2}, {{2}, {3, 4}}, 6, rng);
  const auto a = m.loss(batch, LossConfig{}, nn::ForwardContext::eval(), nullptr);
  const auto b = m.loss(batch, LossConfig{}, nn::ForwardContext::eval(), nullptr);
  CHECK(a.total_value == b.total_value);
  CHECK(a.kl_total == 0.0);
  CHECK(m.parameters()[2].name == "motion_encoder.tokens");
  CHECK(m.parameters()[2].tensor.dim(0) == 1);

  auto scfg = test::tiny_config();
  const TemosModel<double> s(scfg, 4);
  CHECK_THROWS_AS(s.loss(batch, LossConfig{}, nn::ForwardContext::eval(), nullptr), InvalidArgument);
}

TEST_CASE("both branches share one decoder") {
  const TemosModel<double> m(test::tiny_config(), 5);
  std::set<std::string> names;
  std::size_t decoder = 0;
  std::set<const void*> nodes;
  for (const auto& p : m.parameters()) {
    CHECK(names.insert(p.name).second);
    CHECK(nodes.insert(p.tensor.node()).second);
    if (p.name.rfind("decoder.", 0) == 0) ++decoder;
  }
  // one decoder layer: 2 attentions x 4 linears x 2 + 3 norms x 2 + ff 4, plus output 2
  CHECK(decoder == 16 + 6 + 4 + 2);
}

TEST_CASE("appending padding frames or tokens leaves every loss term unchanged") {
  const TemosModel<double> m(test::tiny_config(), 6);
  for (std::size_t pf : {0u, 1u, 5u})
    for (std::size_t pt : {0u, 2u}) {
      std::mt19937_64 r1(13), r2(13);
      const auto a = test::make_test_batch({6, 3, 4}, {{2, 3}, {4}, {5, 6, 7, 8}}, 6, r1);
      const auto b = test::make_test_batch({6, 3, 4}, {{2, 3}, {4}, {5, 6, 7, 8}}, 6, r2, pf, pt);
      std::mt19937_64 na(77), nb(77);
      const auto la = m.loss(a, LossConfig{}, nn::ForwardContext::eval(), &na);
      const auto lb = m.loss(b, LossConfig{}, nn::ForwardContext::eval(), &nb);
      CHECK(std::abs(la.recon_motion - lb.recon_motion) <= 1e-9);
      CHECK(std::abs(la.recon_text - lb.recon_text) <= 1e-9);
      for (int k = 0; k < 4; ++k) CHECK(std::abs(la.kl[k] - lb.kl[k]) <= 1e-9);
      CHECK(std::abs(la.embedding - lb.embedding) <= 1e-9);
      CHECK(std::abs(la.total_value - lb.total_value) <= 1e-9);
    }
}

TEST_CASE("model config validation") {
  ModelConfig c;
  c.heads = 6;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.heads = 4;
  c.vocab_size = 10;
  CHECK_NOTHROW(c.validate());
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
