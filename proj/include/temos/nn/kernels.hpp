#pragma once

// Dense kernels behind the differentiable ops.
//
// `reference` holds plain serial loops written for readability; `parallel`
// holds the OpenMP versions the ops actually call. Every parallel loop is
// over independent outputs and each output is reduced by exactly one thread
// in a fixed order, so results do not depend on the thread count.
//
// Layouts are row-major. Accumulating kernels (`*_grad_*`) add into their
// outputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace temos::nn::kernels {

// Additive score bias for masked keys. exp() of it underflows to exactly 0.
inline constexpr double kMaskBias = -1e9;

struct AttentionDims {
  std::size_t batch = 0;
  std::size_t q_len = 0;
  std::size_t k_len = 0;
  std::size_t model_dim = 0;
  std::size_t heads = 1;
  std::size_t head_dim() const { return model_dim / heads; }
};

namespace reference {

// Y[M,N] = X[M,K] W[K,N] (+ b[N])
template <typename T>
void matmul(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = b.empty() ? T(0) : b[j];
      for (std::size_t t = 0; t < k; ++t) acc += x[i * k + t] * w[t * n + j];
      y[i * n + j] = acc;
    }
  }
}

// dX[M,K] += dY[M,N] W[K,N]^T
template <typename T>
void matmul_grad_input(std::span<const T> dy, std::span<const T> w, std::span<T> dx,
                       std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      T acc = T(0);
      for (std::size_t j = 0; j < n; ++j) acc += dy[i * n + j] * w[t * n + j];
      dx[i * k + t] += acc;
    }
}

// dW[K,N] += X[M,K]^T dY[M,N];  db[N] += sum_i dY[i,:]
template <typename T>
void matmul_grad_weight(std::span<const T> x, std::span<const T> dy, std::span<T> dw, std::span<T> db,
                        std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t t = 0; t < k; ++t)
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t i = 0; i < m; ++i) acc += x[i * k + t] * dy[i * n + j];
      dw[t * n + j] += acc;
    }
  if (!db.empty()) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t i = 0; i < m; ++i) acc += dy[i * n + j];
      db[j] += acc;
    }
  }
}

// q: [B,Lq,D], k/v: [B,Lk,D], key_valid: [B,Lk] (1 = attend), out: [B,Lq,D],
// probs: [B,H,Lq,Lk]. Heads split D into contiguous slices.
template <typename T>
void attention_forward(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                       std::span<const std::uint8_t> key_valid, const AttentionDims& d,
                       std::span<T> out, std::span<T> probs) {
  const std::size_t dh = d.head_dim();
  const T scale = T(1) / std::sqrt(T(dh));
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t h = 0; h < d.heads; ++h)
      for (std::size_t i = 0; i < d.q_len; ++i) {
        T* p = &probs[((b * d.heads + h) * d.q_len + i) * d.k_len];
        T max_score = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < d.k_len; ++j) {
          T s = T(0);
          for (std::size_t t = 0; t < dh; ++t)
            s += q[(b * d.q_len + i) * d.model_dim + h * dh + t] * k[(b * d.k_len + j) * d.model_dim + h * dh + t];
          s *= scale;
          if (!key_valid[b * d.k_len + j]) s += T(kMaskBias);
          p[j] = s;
          max_score = std::max(max_score, s);
        }
        T denom = T(0);
        for (std::size_t j = 0; j < d.k_len; ++j) {
          p[j] = std::exp(p[j] - max_score);
          denom += p[j];
        }
        for (std::size_t j = 0; j < d.k_len; ++j) p[j] /= denom;
        for (std::size_t t = 0; t < dh; ++t) {
          T acc = T(0);
          for (std::size_t j = 0; j < d.k_len; ++j) acc += p[j] * v[(b * d.k_len + j) * d.model_dim + h * dh + t];
          out[(b * d.q_len + i) * d.model_dim + h * dh + t] = acc;
        }
      }
}

template <typename T>
void attention_backward(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                        std::span<const T> probs, std::span<const T> dout, const AttentionDims& d,
                        std::span<T> dq, std::span<T> dk, std::span<T> dv) {
  const std::size_t dh = d.head_dim();
  const T scale = T(1) / std::sqrt(T(dh));
  std::vector<T> dp(d.k_len);
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t h = 0; h < d.heads; ++h)
      for (std::size_t i = 0; i < d.q_len; ++i) {
        const T* p = &probs[((b * d.heads + h) * d.q_len + i) * d.k_len];
        const std::size_t qrow = (b * d.q_len + i) * d.model_dim + h * dh;
        T dot = T(0);
        for (std::size_t j = 0; j < d.k_len; ++j) {
          const std::size_t krow = (b * d.k_len + j) * d.model_dim + h * dh;
          T acc = T(0);
          for (std::size_t t = 0; t < dh; ++t) {
            acc += dout[qrow + t] * v[krow + t];
            dv[krow + t] += p[j] * dout[qrow + t];
          }
          dp[j] = acc;
          dot += p[j] * acc;
        }
        for (std::size_t j = 0; j < d.k_len; ++j) {
          const T ds = p[j] * (dp[j] - dot) * scale;
          const std::size_t krow = (b * d.k_len + j) * d.model_dim + h * dh;
          for (std::size_t t = 0; t < dh; ++t) {
            dq[qrow + t] += ds * k[krow + t];
            dk[krow + t] += ds * q[qrow + t];
          }
        }
      }
}

// y = gain * (x - mean) * rstd + bias over rows of length n.
template <typename T>
void layer_norm_forward(std::span<const T> x, std::span<const T> gain, std::span<const T> bias,
                        std::size_t rows, std::size_t n, T eps, std::span<T> y, std::span<T> mean,
                        std::span<T> rstd) {
  for (std::size_t r = 0; r < rows; ++r) {
    T mu = T(0);
    for (std::size_t c = 0; c < n; ++c) mu += x[r * n + c];
    mu /= T(n);
    T var = T(0);
    for (std::size_t c = 0; c < n; ++c) var += (x[r * n + c] - mu) * (x[r * n + c] - mu);
    var /= T(n);
    const T rs = T(1) / std::sqrt(var + eps);
    mean[r] = mu;
    rstd[r] = rs;
    for (std::size_t c = 0; c < n; ++c) y[r * n + c] = gain[c] * (x[r * n + c] - mu) * rs + bias[c];
  }
}

template <typename T>
void layer_norm_backward(std::span<const T> x, std::span<const T> gain, std::span<const T> mean,
                         std::span<const T> rstd, std::span<const T> dy, std::size_t rows, std::size_t n,
                         std::span<T> dx, std::span<T> dgain, std::span<T> dbias) {
  for (std::size_t r = 0; r < rows; ++r) {
    T sum_g = T(0), sum_gx = T(0);
    for (std::size_t c = 0; c < n; ++c) {
      const T xhat = (x[r * n + c] - mean[r]) * rstd[r];
      const T g = dy[r * n + c] * gain[c];
      sum_g += g;
      sum_gx += g * xhat;
    }
    for (std::size_t c = 0; c < n; ++c) {
      const T xhat = (x[r * n + c] - mean[r]) * rstd[r];
      const T g = dy[r * n + c] * gain[c];
      dx[r * n + c] += rstd[r] * (g - sum_g / T(n) - xhat * sum_gx / T(n));
    }
  }
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < rows; ++r) {
      const T xhat = (x[r * n + c] - mean[r]) * rstd[r];
      dgain[c] += dy[r * n + c] * xhat;
      dbias[c] += dy[r * n + c];
    }
}

}  // namespace reference

namespace parallel {

template <typename T>
void matmul(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y,
            std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    T* yr = &y[i * n];
    for (std::size_t j = 0; j < n; ++j) yr[j] = b.empty() ? T(0) : b[j];
    for (std::size_t t = 0; t < k; ++t) {
      const T xv = x[i * k + t];
      const T* wr = &w[t * n];
      for (std::size_t j = 0; j < n; ++j) yr[j] += xv * wr[j];
    }
  }
}

template <typename T>
void matmul_grad_input(std::span<const T> dy, std::span<const T> w, std::span<T> dx,
                       std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const T* dyr = &dy[i * n];
    for (std::size_t t = 0; t < k; ++t) {
      const T* wr = &w[t * n];
      T acc = T(0);
      for (std::size_t j = 0; j < n; ++j) acc += dyr[j] * wr[j];
      dx[i * k + t] += acc;
    }
  }
}

template <typename T>
void matmul_grad_weight(std::span<const T> x, std::span<const T> dy, std::span<T> dw, std::span<T> db,
                        std::size_t m, std::size_t k, std::size_t n) {
  const auto krows = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static)
  for (std::int64_t tt = 0; tt < krows; ++tt) {
    const auto t = static_cast<std::size_t>(tt);
    T* dwr = &dw[t * n];
    for (std::size_t i = 0; i < m; ++i) {
      const T xv = x[i * k + t];
      if (xv == T(0)) continue;
      const T* dyr = &dy[i * n];
      for (std::size_t j = 0; j < n; ++j) dwr[j] += xv * dyr[j];
    }
  }
  if (!db.empty()) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
  }
}

template <typename T>
void attention_forward(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                       std::span<const std::uint8_t> key_valid, const AttentionDims& d,
                       std::span<T> out, std::span<T> probs) {
  const std::size_t dh = d.head_dim();
  const T scale = T(1) / std::sqrt(T(dh));
  const auto jobs = static_cast<std::int64_t>(d.batch * d.heads);
#pragma omp parallel for schedule(static)
  for (std::int64_t job = 0; job < jobs; ++job) {
    const std::size_t b = static_cast<std::size_t>(job) / d.heads;
    const std::size_t h = static_cast<std::size_t>(job) % d.heads;
    const std::uint8_t* valid = &key_valid[b * d.k_len];
    for (std::size_t i = 0; i < d.q_len; ++i) {
      const T* qr = &q[(b * d.q_len + i) * d.model_dim + h * dh];
      T* p = &probs[((b * d.heads + h) * d.q_len + i) * d.k_len];
      T max_score = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < d.k_len; ++j) {
        const T* kr = &k[(b * d.k_len + j) * d.model_dim + h * dh];
        T s = T(0);
        for (std::size_t t = 0; t < dh; ++t) s += qr[t] * kr[t];
        s *= scale;
        if (!valid[j]) s += T(kMaskBias);
        p[j] = s;
        if (s > max_score) max_score = s;
      }
      T denom = T(0);
      for (std::size_t j = 0; j < d.k_len; ++j) {
        p[j] = std::exp(p[j] - max_score);
        denom += p[j];
      }
      const T inv = T(1) / denom;
      T* orow = &out[(b * d.q_len + i) * d.model_dim + h * dh];
      for (std::size_t t = 0; t < dh; ++t) orow[t] = T(0);
      for (std::size_t j = 0; j < d.k_len; ++j) {
        p[j] *= inv;
        if (p[j] == T(0)) continue;
        const T* vr = &v[(b * d.k_len + j) * d.model_dim + h * dh];
        for (std::size_t t = 0; t < dh; ++t) orow[t] += p[j] * vr[t];
      }
    }
  }
}

template <typename T>
void attention_backward(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                        std::span<const T> probs, std::span<const T> dout, const AttentionDims& d,
                        std::span<T> dq, std::span<T> dk, std::span<T> dv) {
  const std::size_t dh = d.head_dim();
  const T scale = T(1) / std::sqrt(T(dh));
  const auto jobs = static_cast<std::int64_t>(d.batch * d.heads);
#pragma omp parallel
  {
    std::vector<T> dp(d.k_len);
#pragma omp for schedule(static)
    for (std::int64_t job = 0; job < jobs; ++job) {
      const std::size_t b = static_cast<std::size_t>(job) / d.heads;
      const std::size_t h = static_cast<std::size_t>(job) % d.heads;
      for (std::size_t i = 0; i < d.q_len; ++i) {
        const T* p = &probs[((b * d.heads + h) * d.q_len + i) * d.k_len];
        const std::size_t qrow = (b * d.q_len + i) * d.model_dim + h * dh;
        const T* dor = &dout[qrow];
        T dot = T(0);
        for (std::size_t j = 0; j < d.k_len; ++j) {
          const std::size_t krow = (b * d.k_len + j) * d.model_dim + h * dh;
          const T* vr = &v[krow];
          T* dvr = &dv[krow];
          T acc = T(0);
          for (std::size_t t = 0; t < dh; ++t) {
            acc += dor[t] * vr[t];
            dvr[t] += p[j] * dor[t];
          }
          dp[j] = acc;
          dot += p[j] * acc;
        }
        T* dqr = &dq[qrow];
        const T* qr = &q[qrow];
        for (std::size_t j = 0; j < d.k_len; ++j) {
          const T ds = p[j] * (dp[j] - dot) * scale;
          if (ds == T(0)) continue;
          const std::size_t krow = (b * d.k_len + j) * d.model_dim + h * dh;
          const T* kr = &k[krow];
          T* dkr = &dk[krow];
          for (std::size_t t = 0; t < dh; ++t) {
            dqr[t] += ds * kr[t];
            dkr[t] += ds * qr[t];
          }
        }
      }
    }
  }
}

template <typename T>
void layer_norm_forward(std::span<const T> x, std::span<const T> gain, std::span<const T> bias,
                        std::size_t rows, std::size_t n, T eps, std::span<T> y, std::span<T> mean,
                        std::span<T> rstd) {
  const auto nrows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t rr = 0; rr < nrows; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    const T* xr = &x[r * n];
    T mu = T(0);
    for (std::size_t c = 0; c < n; ++c) mu += xr[c];
    mu /= T(n);
    T var = T(0);
    for (std::size_t c = 0; c < n; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= T(n);
    const T rs = T(1) / std::sqrt(var + eps);
    mean[r] = mu;
    rstd[r] = rs;
    T* yr = &y[r * n];
    for (std::size_t c = 0; c < n; ++c) yr[c] = gain[c] * (xr[c] - mu) * rs + bias[c];
  }
}

template <typename T>
void layer_norm_backward(std::span<const T> x, std::span<const T> gain, std::span<const T> mean,
                         std::span<const T> rstd, std::span<const T> dy, std::size_t rows, std::size_t n,
                         std::span<T> dx, std::span<T> dgain, std::span<T> dbias) {
  const auto nrows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t rr = 0; rr < nrows; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    const T* xr = &x[r * n];
    const T* dyr = &dy[r * n];
    T sum_g = T(0), sum_gx = T(0);
    for (std::size_t c = 0; c < n; ++c) {
      const T xhat = (xr[c] - mean[r]) * rstd[r];
      const T g = dyr[c] * gain[c];
      sum_g += g;
      sum_gx += g * xhat;
    }
    T* dxr = &dx[r * n];
    for (std::size_t c = 0; c < n; ++c) {
      const T xhat = (xr[c] - mean[r]) * rstd[r];
      const T g = dyr[c] * gain[c];
      dxr[c] += rstd[r] * (g - sum_g / T(n) - xhat * sum_gx / T(n));
    }
  }
  // Per-column sums run serially over rows.
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const T xhat = (x[r * n + c] - mean[r]) * rstd[r];
      dgain[c] += dy[r * n + c] * xhat;
      dbias[c] += dy[r * n + c];
    }
}

}  // namespace parallel

}  // namespace temos::nn::kernels
