#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ddad/rng.hpp"
#include "ddad/tensor.hpp"

namespace ddad {

// Trainable parameter or persistent state tensor of a layer. Running
// statistics are state (trainable == false): serialized with checkpoints,
// ignored by the optimizer.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  bool trainable = true;
};

// ---------------------------------------------------------------------------
// im2col / col2im over a whole batch.
// col has shape (Ci*k*k) x (N*Ho*Wo); column index is n*Ho*Wo + oh*Wo + ow.
// ---------------------------------------------------------------------------

inline int conv_out_dim(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

// Fixed-order lane reductions. Accumulation order depends only on the
// element count, never on pointer alignment, so results are reproducible
// across allocations while the stride-8 pattern still vectorizes.
template <typename T>
T det_sum(const T* p, int64_t n) {
  T lanes[8] = {};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) lanes[l] += p[i + l];
  T acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
          ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; i < n; ++i) acc += p[i];
  return acc;
}

template <typename T>
T det_sumsq(const T* p, int64_t n) {
  T lanes[8] = {};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) lanes[l] += p[i + l] * p[i + l];
  T acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
          ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; i < n; ++i) acc += p[i] * p[i];
  return acc;
}

template <typename T>
T det_dot(const T* p, const T* q, int64_t n) {
  T lanes[8] = {};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) lanes[l] += p[i + l] * q[i + l];
  T acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
          ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; i < n; ++i) acc += p[i] * q[i];
  return acc;
}

template <typename T>
void im2col_batch(const Tensor<T>& x, int k, int s, int p, Tensor<T>& col) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = conv_out_dim(static_cast<int>(H), k, s, p);
  const int Wo = conv_out_dim(static_cast<int>(W), k, s, p);
  const int64_t cols = N * Ho * Wo;
  const int64_t rows = C * k * k;
  col.ensure_shape({rows, cols});
  T* cp = col.data();
  const T* xp = x.data();
  for (int64_t c = 0; c < C; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        T* row = cp + ((c * k + kh) * k + kw) * cols;
        for (int64_t n = 0; n < N; ++n) {
          const T* img = xp + (n * C + c) * H * W;
          T* dst = row + n * Ho * Wo;
          for (int oh = 0; oh < Ho; ++oh) {
            const int ih = oh * s + kh - p;
            if (ih < 0 || ih >= H) {
              for (int ow = 0; ow < Wo; ++ow) dst[oh * Wo + ow] = T(0);
              continue;
            }
            const T* src_row = img + ih * W;
            for (int ow = 0; ow < Wo; ++ow) {
              const int iw = ow * s + kw - p;
              dst[oh * Wo + ow] =
                  (iw < 0 || iw >= W) ? T(0) : src_row[iw];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_batch(const Tensor<T>& col, int k, int s, int p, Tensor<T>& x) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = conv_out_dim(static_cast<int>(H), k, s, p);
  const int Wo = conv_out_dim(static_cast<int>(W), k, s, p);
  const int64_t cols = N * Ho * Wo;
  x.zero();
  const T* cp = col.data();
  T* xp = x.data();
  for (int64_t c = 0; c < C; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const T* row = cp + ((c * k + kh) * k + kw) * cols;
        for (int64_t n = 0; n < N; ++n) {
          T* img = xp + (n * C + c) * H * W;
          const T* src = row + n * Ho * Wo;
          for (int oh = 0; oh < Ho; ++oh) {
            const int ih = oh * s + kh - p;
            if (ih < 0 || ih >= H) continue;
            T* dst_row = img + ih * W;
            for (int ow = 0; ow < Wo; ++ow) {
              const int iw = ow * s + kw - p;
              if (iw >= 0 && iw < W) dst_row[iw] += src[oh * Wo + ow];
            }
          }
        }
      }
    }
  }
}

// (N,C,H,W) -> (C x N*H*W) gather and its inverse scatter, used to move
// between tensor layout and GEMM layout.
template <typename T>
void gather_channels(const Tensor<T>& x, Tensor<T>& out) {
  const int64_t N = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  out.ensure_shape({C, N * S});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      std::copy_n(x.data() + (n * C + c) * S, S,
                  out.data() + c * N * S + n * S);
}

template <typename T>
void scatter_channels(const Tensor<T>& in, Tensor<T>& x) {
  const int64_t N = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      std::copy_n(in.data() + c * N * S + n * S, S,
                  x.data() + (n * C + c) * S);
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int k, int s, int p)
      : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), k_(k), s_(s),
        p_(p), weight_({out_ch, in_ch, k, k}), bias_({out_ch}),
        dweight_({out_ch, in_ch, k, k}), dbias_({out_ch}) {}

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch_) * k_ * k_);
    for (int64_t i = 0; i < weight_.numel(); ++i)
      weight_[i] = static_cast<T>(rng.uniform(-bound, bound));
    for (int64_t i = 0; i < bias_.numel(); ++i)
      bias_[i] = static_cast<T>(rng.uniform(-bound, bound));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    const int64_t N = x.dim(0);
    in_h_ = static_cast<int>(x.dim(2));
    in_w_ = static_cast<int>(x.dim(3));
    if (direct3x3()) return forward_direct(x);
    const int Ho = conv_out_dim(in_h_, k_, s_, p_);
    const int Wo = conv_out_dim(in_w_, k_, s_, p_);
    im2col_batch(x, k_, s_, p_, col_);
    gem_.ensure_shape({out_ch_, N * Ho * Wo});
    gem_.mat(out_ch_, N * Ho * Wo).noalias() =
        weight_.mat(out_ch_, static_cast<int64_t>(in_ch_) * k_ * k_) *
        col_.mat(col_.dim(0), col_.dim(1));
    for (int64_t c = 0; c < out_ch_; ++c) {
      T* row = gem_.data() + c * N * Ho * Wo;
      const T b = bias_[c];
      for (int64_t i = 0; i < N * Ho * Wo; ++i) row[i] += b;
    }
    Tensor<T> y({N, out_ch_, Ho, Wo});
    scatter_channels(gem_, y);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    if (direct3x3()) return backward_direct(dy);
    const int64_t N = dy.dim(0);
    const int64_t Ho = dy.dim(2), Wo = dy.dim(3);
    const int64_t kk = static_cast<int64_t>(in_ch_) * k_ * k_;
    gather_channels(dy, dymat_);
    // parameter grads
    dweight_.mat(out_ch_, kk).noalias() =
        dymat_.mat(out_ch_, N * Ho * Wo) *
        col_.mat(kk, N * Ho * Wo).transpose();
    for (int64_t c = 0; c < out_ch_; ++c) {
      T acc = T(0);
      const T* row = dymat_.data() + c * N * Ho * Wo;
      for (int64_t i = 0; i < N * Ho * Wo; ++i) acc += row[i];
      dbias_[c] = acc;
    }
    // input grad
    dcol_.ensure_shape({kk, N * Ho * Wo});
    dcol_.mat(kk, N * Ho * Wo).noalias() =
        weight_.mat(out_ch_, kk).transpose() * dymat_.mat(out_ch_, N * Ho * Wo);
    Tensor<T> dx({N, in_ch_, in_h_, in_w_});
    col2im_batch(dcol_, k_, s_, p_, dx);
    return dx;
  }

  void collect(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".weight", &weight_, &dweight_, true});
    out.push_back({name_ + ".bias", &bias_, &dbias_, true});
  }

 private:
  // Direct shift-and-accumulate path for 3x3 stride-1 "same" convolutions
  // with a thin channel side (the refinement net's first and last layer);
  // skips im2col buffers whose traffic dwarfs the arithmetic there.
  bool direct3x3() const {
    return k_ == 3 && s_ == 1 && p_ == 1 && std::min(in_ch_, out_ch_) <= 8;
  }

  Tensor<T> forward_direct(const Tensor<T>& x) {
    const int64_t N = x.dim(0), H = in_h_, W = in_w_;
    x_ = x;  // kept for the weight gradient
    Tensor<T> y({N, out_ch_, H, W});
    for (int64_t n = 0; n < N; ++n) {
      for (int64_t co = 0; co < out_ch_; ++co) {
        T* out_base = y.data() + (n * out_ch_ + co) * H * W;
        const T b = bias_[co];
        for (int64_t i = 0; i < H * W; ++i) out_base[i] = b;
        for (int64_t ci = 0; ci < in_ch_; ++ci) {
          const T* in_base = x.data() + (n * in_ch_ + ci) * H * W;
          const T* wk = weight_.data() + (co * in_ch_ + ci) * 9;
          for (int kh = 0; kh < 3; ++kh) {
            const int y_lo = std::max<int>(0, 1 - kh);
            const int y_hi = std::min<int>(static_cast<int>(H),
                                           static_cast<int>(H) + 1 - kh);
            for (int kw = 0; kw < 3; ++kw) {
              const T w = wk[kh * 3 + kw];
              const int x_lo = std::max<int>(0, 1 - kw);
              const int x_hi = std::min<int>(static_cast<int>(W),
                                             static_cast<int>(W) + 1 - kw);
              for (int yy = y_lo; yy < y_hi; ++yy) {
                T* __restrict dst = out_base + yy * W;
                const T* __restrict src = in_base + (yy + kh - 1) * W + (kw - 1);
                for (int xx = x_lo; xx < x_hi; ++xx) dst[xx] += w * src[xx];
              }
            }
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward_direct(const Tensor<T>& dy) {
    const int64_t N = dy.dim(0), H = in_h_, W = in_w_;
    Tensor<T> dx({N, in_ch_, H, W});
    dweight_.zero();
    dbias_.zero();
    for (int64_t n = 0; n < N; ++n) {
      for (int64_t co = 0; co < out_ch_; ++co) {
        const T* dy_base = dy.data() + (n * out_ch_ + co) * H * W;
        dbias_[co] += det_sum(dy_base, H * W);
        for (int64_t ci = 0; ci < in_ch_; ++ci) {
          const T* in_base = x_.data() + (n * in_ch_ + ci) * H * W;
          T* dx_base = dx.data() + (n * in_ch_ + ci) * H * W;
          const T* wk = weight_.data() + (co * in_ch_ + ci) * 9;
          T* dwk = dweight_.data() + (co * in_ch_ + ci) * 9;
          for (int kh = 0; kh < 3; ++kh) {
            const int y_lo = std::max<int>(0, 1 - kh);
            const int y_hi = std::min<int>(static_cast<int>(H),
                                           static_cast<int>(H) + 1 - kh);
            for (int kw = 0; kw < 3; ++kw) {
              const T w = wk[kh * 3 + kw];
              const int x_lo = std::max<int>(0, 1 - kw);
              const int x_hi = std::min<int>(static_cast<int>(W),
                                             static_cast<int>(W) + 1 - kw);
              T acc_w = T(0);
              for (int yy = y_lo; yy < y_hi; ++yy) {
                const T* __restrict dyr = dy_base + yy * W;
                const T* __restrict src = in_base + (yy + kh - 1) * W + (kw - 1);
                acc_w += det_dot(dyr + x_lo, src + x_lo, x_hi - x_lo);
                T* __restrict dxr = dx_base + (yy + kh - 1) * W + (kw - 1);
                for (int xx = x_lo; xx < x_hi; ++xx) dxr[xx] += w * dyr[xx];
              }
              dwk[kh * 3 + kw] += acc_w;
            }
          }
        }
      }
    }
    return dx;
  }

  std::string name_;
  int64_t in_ch_, out_ch_;
  int k_, s_, p_;
  int in_h_ = 0, in_w_ = 0;
  Tensor<T> weight_, bias_, dweight_, dbias_;
  Tensor<T> col_;  // cached from forward for the weight-grad GEMM
  Tensor<T> gem_, dymat_, dcol_, x_;
};

// Transposed convolution; weight layout (in_ch, out_ch, k, k). Forward is
// the data-gradient of the mirror convolution, so it shares the same
// im2col/col2im core.
template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d(std::string name, int in_ch, int out_ch, int k, int s, int p)
      : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), k_(k), s_(s),
        p_(p), weight_({in_ch, out_ch, k, k}), bias_({out_ch}),
        dweight_({in_ch, out_ch, k, k}), dbias_({out_ch}) {}

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch_) * k_ * k_);
    for (int64_t i = 0; i < weight_.numel(); ++i)
      weight_[i] = static_cast<T>(rng.uniform(-bound, bound));
    for (int64_t i = 0; i < bias_.numel(); ++i)
      bias_[i] = static_cast<T>(rng.uniform(-bound, bound));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    const int64_t N = x.dim(0);
    in_h_ = static_cast<int>(x.dim(2));
    in_w_ = static_cast<int>(x.dim(3));
    const int Ho = (in_h_ - 1) * s_ - 2 * p_ + k_;
    const int Wo = (in_w_ - 1) * s_ - 2 * p_ + k_;
    gather_channels(x, xmat_);
    const int64_t kk = static_cast<int64_t>(out_ch_) * k_ * k_;
    dcol_.ensure_shape({kk, N * in_h_ * in_w_});
    dcol_.mat(kk, N * in_h_ * in_w_).noalias() =
        weight_.mat(in_ch_, kk).transpose() *
        xmat_.mat(in_ch_, N * in_h_ * in_w_);
    Tensor<T> y({N, out_ch_, Ho, Wo});
    col2im_batch(dcol_, k_, s_, p_, y);
    for (int64_t n = 0; n < N; ++n)
      for (int64_t c = 0; c < out_ch_; ++c) {
        T* img = y.data() + (n * out_ch_ + c) * Ho * Wo;
        const T b = bias_[c];
        for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) img[i] += b;
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int64_t N = dy.dim(0);
    const int64_t kk = static_cast<int64_t>(out_ch_) * k_ * k_;
    const int64_t in_s = static_cast<int64_t>(in_h_) * in_w_;
    im2col_batch(dy, k_, s_, p_, dycol_);
    // dweight = xmat . im2col(dy)^T
    dweight_.mat(in_ch_, kk).noalias() =
        xmat_.mat(in_ch_, N * in_s) * dycol_.mat(kk, N * in_s).transpose();
    for (int64_t c = 0; c < out_ch_; ++c) {
      T acc = T(0);
      const int64_t Ho = dy.dim(2), Wo = dy.dim(3);
      for (int64_t n = 0; n < N; ++n) {
        const T* img = dy.data() + (n * out_ch_ + c) * Ho * Wo;
        for (int64_t i = 0; i < Ho * Wo; ++i) acc += img[i];
      }
      dbias_[c] = acc;
    }
    // dx = mirror conv forward of dy
    gem_.ensure_shape({in_ch_, N * in_s});
    gem_.mat(in_ch_, N * in_s).noalias() =
        weight_.mat(in_ch_, kk) * dycol_.mat(kk, N * in_s);
    Tensor<T> dx({N, in_ch_, in_h_, in_w_});
    scatter_channels(gem_, dx);
    return dx;
  }

  void collect(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".weight", &weight_, &dweight_, true});
    out.push_back({name_ + ".bias", &bias_, &dbias_, true});
  }

 private:
  std::string name_;
  int64_t in_ch_, out_ch_;
  int k_, s_, p_;
  int in_h_ = 0, in_w_ = 0;
  Tensor<T> weight_, bias_, dweight_, dbias_;
  Tensor<T> xmat_, dycol_, dcol_, gem_;
};

// Channel-wise batch normalization. Accepts rank-4 (N,C,H,W) or rank-2
// (N,F) input; statistics are per channel over everything else.
template <typename T>
class BatchNorm {
 public:
  BatchNorm(std::string name, int channels, T momentum = T(0.1),
            T eps = T(1e-5))
      : name_(std::move(name)), c_(channels), momentum_(momentum), eps_(eps),
        gamma_({channels}), beta_({channels}), dgamma_({channels}),
        dbeta_({channels}), running_mean_({channels}),
        running_var_({channels}) {
    gamma_.fill(T(1));
    running_var_.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    shape_ = x.shape();
    const int64_t N = x.dim(0);
    const int64_t S = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    const int64_t m = N * S;
    Tensor<T> y(x.shape());
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    auto slice = [&](const Tensor<T>& t, int64_t n, int64_t c) {
      return Eigen::Map<const Vec>(t.data() + (n * c_ + c) * S, S);
    };
    auto mslice = [&](Tensor<T>& t, int64_t n, int64_t c) {
      return Eigen::Map<Vec>(t.data() + (n * c_ + c) * S, S);
    };
    if (train) {
      mean_ = Tensor<T>({c_});
      inv_std_ = Tensor<T>({c_});
      xhat_ = Tensor<T>(x.shape());
      for (int64_t c = 0; c < c_; ++c) {
        T sum = T(0), sumsq = T(0);
        for (int64_t n = 0; n < N; ++n) {
          const T* p = x.data() + (n * c_ + c) * S;
          sum += det_sum(p, S);
          sumsq += det_sumsq(p, S);
        }
        const T mu = sum / m;
        const T var = std::max(T(0), sumsq / m - mu * mu);
        const T istd = T(1) / std::sqrt(var + eps_);
        mean_[c] = mu;
        inv_std_[c] = istd;
        running_mean_[c] =
            (T(1) - momentum_) * running_mean_[c] + momentum_ * mu;
        const T var_u = m > 1 ? var * static_cast<T>(m) / (m - 1) : var;
        running_var_[c] =
            (T(1) - momentum_) * running_var_[c] + momentum_ * var_u;
        const T g = gamma_[c], b = beta_[c];
        for (int64_t n = 0; n < N; ++n) {
          mslice(xhat_, n, c) = (slice(x, n, c).array() - mu) * istd;
          mslice(y, n, c) = slice(xhat_, n, c).array() * g + b;
        }
      }
    } else {
      for (int64_t c = 0; c < c_; ++c) {
        const T istd = T(1) / std::sqrt(running_var_[c] + eps_);
        const T mu = running_mean_[c];
        const T g = gamma_[c], b = beta_[c];
        for (int64_t n = 0; n < N; ++n)
          mslice(y, n, c) = (slice(x, n, c).array() - mu) * (istd * g) + b;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int64_t N = dy.dim(0);
    const int64_t S = dy.rank() == 4 ? dy.dim(2) * dy.dim(3) : 1;
    const int64_t m = N * S;
    Tensor<T> dx(dy.shape());
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    auto slice = [&](const Tensor<T>& t, int64_t n, int64_t c) {
      return Eigen::Map<const Vec>(t.data() + (n * c_ + c) * S, S);
    };
    for (int64_t c = 0; c < c_; ++c) {
      T sum_dy = T(0), sum_dy_xhat = T(0);
      for (int64_t n = 0; n < N; ++n) {
        const T* dyp = dy.data() + (n * c_ + c) * S;
        const T* xhp = xhat_.data() + (n * c_ + c) * S;
        sum_dy += det_sum(dyp, S);
        sum_dy_xhat += det_dot(dyp, xhp, S);
      }
      dgamma_[c] = sum_dy_xhat;
      dbeta_[c] = sum_dy;
      const T g_istd = gamma_[c] * inv_std_[c];
      const T mean_dy = sum_dy / m;
      const T mean_dy_xhat = sum_dy_xhat / m;
      for (int64_t n = 0; n < N; ++n) {
        Eigen::Map<Vec>(dx.data() + (n * c_ + c) * S, S) =
            (slice(dy, n, c).array() - mean_dy -
             slice(xhat_, n, c).array() * mean_dy_xhat) *
            g_istd;
      }
    }
    return dx;
  }

  void collect(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".weight", &gamma_, &dgamma_, true});
    out.push_back({name_ + ".bias", &beta_, &dbeta_, true});
    out.push_back({name_ + ".running_mean", &running_mean_, nullptr, false});
    out.push_back({name_ + ".running_var", &running_var_, nullptr, false});
  }

 private:
  std::string name_;
  int64_t c_;
  T momentum_, eps_;
  Tensor<T> gamma_, beta_, dgamma_, dbeta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> mean_, inv_std_, xhat_;
  std::vector<int64_t> shape_;
};

template <typename T>
class Linear {
 public:
  Linear(std::string name, int in_f, int out_f)
      : name_(std::move(name)), in_f_(in_f), out_f_(out_f),
        weight_({out_f, in_f}), bias_({out_f}), dweight_({out_f, in_f}),
        dbias_({out_f}) {}

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_f_));
    for (int64_t i = 0; i < weight_.numel(); ++i)
      weight_[i] = static_cast<T>(rng.uniform(-bound, bound));
    for (int64_t i = 0; i < bias_.numel(); ++i)
      bias_[i] = static_cast<T>(rng.uniform(-bound, bound));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    const int64_t N = x.dim(0);
    x_ = x;
    Tensor<T> y({N, out_f_});
    y.mat(N, out_f_).noalias() =
        x.mat(N, in_f_) * weight_.mat(out_f_, in_f_).transpose();
    for (int64_t n = 0; n < N; ++n)
      for (int64_t j = 0; j < out_f_; ++j) y.at(n, j) += bias_[j];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int64_t N = dy.dim(0);
    dweight_.mat(out_f_, in_f_).noalias() =
        dy.mat(N, out_f_).transpose() * x_.mat(N, in_f_);
    for (int64_t j = 0; j < out_f_; ++j) {
      T acc = T(0);
      for (int64_t n = 0; n < N; ++n) acc += dy.at(n, j);
      dbias_[j] = acc;
    }
    Tensor<T> dx({N, in_f_});
    dx.mat(N, in_f_).noalias() = dy.mat(N, out_f_) * weight_.mat(out_f_, in_f_);
    return dx;
  }

  void collect(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".weight", &weight_, &dweight_, true});
    out.push_back({name_ + ".bias", &bias_, &dbias_, true});
  }

 private:
  std::string name_;
  int64_t in_f_, out_f_;
  Tensor<T> weight_, bias_, dweight_, dbias_, x_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    mask_.resize(static_cast<size_t>(x.numel()));
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) {
      const bool on = x[i] > T(0);
      y[i] = on ? x[i] : T(0);
      mask_[static_cast<size_t>(i)] = on;
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape());
    for (int64_t i = 0; i < dy.numel(); ++i)
      dx[i] = mask_[static_cast<size_t>(i)] ? dy[i] : T(0);
    return dx;
  }

 private:
  std::vector<uint8_t> mask_;
};

template <typename T>
class Sigmoid {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    y_ = Tensor<T>(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i)
      y_[i] = T(1) / (T(1) + std::exp(-x[i]));
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape());
    for (int64_t i = 0; i < dy.numel(); ++i)
      dx[i] = dy[i] * y_[i] * (T(1) - y_[i]);
    return dx;
  }
  const Tensor<T>& cached_output() const { return y_; }

 private:
  Tensor<T> y_;
};

// Hard clamp; gradient is zero outside the admitted range.
template <typename T>
class Clamp {
 public:
  Clamp(T lo, T hi) : lo_(lo), hi_(hi) {}
  Tensor<T> forward(const Tensor<T>& x) {
    inside_.assign(static_cast<size_t>(x.numel()), 1);
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) {
      if (x[i] < lo_) {
        y[i] = lo_;
        inside_[static_cast<size_t>(i)] = 0;
      } else if (x[i] > hi_) {
        y[i] = hi_;
        inside_[static_cast<size_t>(i)] = 0;
      } else {
        y[i] = x[i];
      }
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape());
    for (int64_t i = 0; i < dy.numel(); ++i)
      dx[i] = inside_[static_cast<size_t>(i)] ? dy[i] : T(0);
    return dx;
  }

 private:
  T lo_, hi_;
  std::vector<uint8_t> inside_;
};

}  // namespace ddad
