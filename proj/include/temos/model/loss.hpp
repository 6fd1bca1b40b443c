#pragma once

// Training objective: reconstruction, the four KL addends and the
// cross-modal embedding similarity.

#include <array>
#include <random>
#include <vector>
#include <cmath>
#include <string>

#include "temos/errors.hpp"
#include "temos/nn/mask.hpp"
#include "temos/nn/ops.hpp"

namespace temos::model {

using nn::Tensor;

// Diagonal Gaussian per batch row. log_std is undefined for the
// deterministic variant.
template <typename T>
struct LatentDistribution {
  Tensor<T> mu;       // [B, d]
  Tensor<T> log_std;  // [B, d]
  bool stochastic() const { return log_std.defined(); }
};

// KL(a || b) between diagonal Gaussians given as (mu, log_std) [B, d]:
// summed over dimensions, averaged over the batch.
template <typename T>
Tensor<T> kl_gaussians(const Tensor<T>& mu_a, const Tensor<T>& ls_a, const Tensor<T>& mu_b, const Tensor<T>& ls_b) {
  nn::detail::require_same_shape(mu_a.shape(), ls_a.shape(), "kl_gaussians");
  nn::detail::require_same_shape(mu_a.shape(), mu_b.shape(), "kl_gaussians");
  nn::detail::require_same_shape(mu_a.shape(), ls_b.shape(), "kl_gaussians");
  if (mu_a.rank() != 2) throw InvalidArgument("kl_gaussians: expected [batch, dim] inputs");
  const T batch = T(mu_a.dim(0));
  T acc = T(0);
  for (std::size_t i = 0; i < mu_a.numel(); ++i) {
    const T d = mu_a.values()[i] - mu_b.values()[i];
    const T la = ls_a.values()[i], lb = ls_b.values()[i];
    acc += lb - la + T(0.5) * (std::exp(T(2) * (la - lb)) + d * d * std::exp(T(-2) * lb)) - T(0.5);
  }
  return nn::make_result<T>({}, {acc / batch}, {mu_a.node_ptr(), ls_a.node_ptr(), mu_b.node_ptr(), ls_b.node_ptr()},
                            [batch](nn::Node<T>& self) {
                              const auto& ma = self.parents[0]->value;
                              const auto& la = self.parents[1]->value;
                              const auto& mb = self.parents[2]->value;
                              const auto& lb = self.parents[3]->value;
                              const T g = self.grad[0] / batch;
                              for (std::size_t i = 0; i < ma.size(); ++i) {
                                const T d = ma[i] - mb[i];
                                const T ratio = std::exp(T(2) * (la[i] - lb[i]));
                                const T inv_vb = std::exp(T(-2) * lb[i]);
                                if (self.parents[0]->requires_grad) self.parents[0]->grad[i] += g * d * inv_vb;
                                if (self.parents[1]->requires_grad) self.parents[1]->grad[i] += g * (ratio - T(1));
                                if (self.parents[2]->requires_grad) self.parents[2]->grad[i] -= g * d * inv_vb;
                                if (self.parents[3]->requires_grad)
                                  self.parents[3]->grad[i] += g * (T(1) - ratio - d * d * inv_vb);
                              }
                            });
}

template <typename T>
Tensor<T> kl_standard_normal(const Tensor<T>& mu, const Tensor<T>& log_std) {
  return kl_gaussians(mu, log_std, Tensor<T>::zeros(mu.shape()), Tensor<T>::zeros(mu.shape()));
}

// z = mu + exp(log_std) * eps with eps ~ N(0, I) drawn from rng.
template <typename T, typename Rng>
Tensor<T> reparameterize(const LatentDistribution<T>& dist, Rng& rng) {
  if (!dist.stochastic()) return dist.mu;
  std::normal_distribution<double> n;
  std::vector<T> eps(dist.mu.numel());
  for (auto& e : eps) e = static_cast<T>(n(rng));
  return nn::add(dist.mu, nn::mul(nn::exp(dist.log_std), Tensor<T>::from(dist.mu.shape(), std::move(eps))));
}

struct LossConfig {
  double lambda_kl = 1e-5;
  double lambda_e = 1e-5;
  bool cross_kl = true;        // KL(phi_T, phi_M) + KL(phi_M, phi_T)
  bool prior_kl = true;        // KL(phi_T, psi) + KL(phi_M, psi)
  bool embedding_loss = true;  // smooth L1 between z_T and z_M
  bool motion_encoder = true;  // false: text branch only
};

enum KlTerm { kKlTextMotion = 0, kKlMotionText = 1, kKlTextPrior = 2, kKlMotionPrior = 3 };

template <typename T>
struct LossBreakdown {
  Tensor<T> total;
  double recon_motion = 0.0;  // smoothL1(H, H^M)
  double recon_text = 0.0;    // smoothL1(H, H^T)
  double recon = 0.0;         // L_R
  std::array<double, 4> kl{};
  double kl_total = 0.0;      // L_KL
  double embedding = 0.0;     // L_E
  double total_value = 0.0;
};

namespace detail {

inline void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericalError(std::string("loss term ") + term + " is not finite");
}

template <typename T>
Tensor<T> weighted_add(const Tensor<T>& acc, const Tensor<T>& term, double weight) {
  const Tensor<T> scaled = nn::scale(term, static_cast<T>(weight));
  return acc.defined() ? nn::add(acc, scaled) : scaled;
}

}  // namespace detail

// H, H_hat_*: [B, F, p]; mask marks valid frames. The motion-branch inputs
// (h_motion, dist_motion, z_motion) are ignored when cfg.motion_encoder is off.
template <typename T>
LossBreakdown<T> total_loss(const Tensor<T>& h, const nn::AttentionMask& mask, const Tensor<T>& h_motion,
                            const Tensor<T>& h_text, const LatentDistribution<T>& dist_text,
                            const LatentDistribution<T>& dist_motion, const Tensor<T>& z_text,
                            const Tensor<T>& z_motion, const LossConfig& cfg) {
  LossBreakdown<T> out;
  const Tensor<T> rt = nn::smooth_l1(h, h_text, &mask);
  out.recon_text = static_cast<double>(rt.item());
  detail::require_finite(out.recon_text, "L_R (text branch)");
  Tensor<T> recon = rt;
  if (cfg.motion_encoder) {
    const Tensor<T> rm = nn::smooth_l1(h, h_motion, &mask);
    out.recon_motion = static_cast<double>(rm.item());
    detail::require_finite(out.recon_motion, "L_R (motion branch)");
    recon = nn::add(rm, rt);
  }
  out.recon = static_cast<double>(recon.item());
  Tensor<T> total = recon;

  Tensor<T> kl;
  auto add_kl = [&](KlTerm which, const Tensor<T>& term, const char* name) {
    out.kl[which] = static_cast<double>(term.item());
    detail::require_finite(out.kl[which], name);
    kl = kl.defined() ? nn::add(kl, term) : term;
  };
  if (dist_text.stochastic()) {
    if (cfg.motion_encoder && cfg.cross_kl) {
      add_kl(kKlTextMotion, kl_gaussians(dist_text.mu, dist_text.log_std, dist_motion.mu, dist_motion.log_std),
             "KL(text, motion)");
      add_kl(kKlMotionText, kl_gaussians(dist_motion.mu, dist_motion.log_std, dist_text.mu, dist_text.log_std),
             "KL(motion, text)");
    }
    if (cfg.prior_kl) {
      add_kl(kKlTextPrior, kl_standard_normal(dist_text.mu, dist_text.log_std), "KL(text, prior)");
      if (cfg.motion_encoder)
        add_kl(kKlMotionPrior, kl_standard_normal(dist_motion.mu, dist_motion.log_std), "KL(motion, prior)");
    }
  }
  if (kl.defined()) {
    out.kl_total = static_cast<double>(kl.item());
    total = detail::weighted_add(total, kl, cfg.lambda_kl);
  }
  if (cfg.motion_encoder && cfg.embedding_loss) {
    const Tensor<T> e = nn::smooth_l1(z_text, z_motion);
    out.embedding = static_cast<double>(e.item());
    detail::require_finite(out.embedding, "L_E");
    total = detail::weighted_add(total, e, cfg.lambda_e);
  }
  out.total = total;
  out.total_value = static_cast<double>(total.item());
  detail::require_finite(out.total_value, "total");
  return out;
}

}  // namespace temos::model
