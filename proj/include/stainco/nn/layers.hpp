#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stainco/rng.hpp"
#include "stainco/tensor.hpp"

namespace stainco::nn {

// Named view of one learnable tensor (or a non-trainable buffer such as a
// batch-norm running statistic). grad is null for buffers.
template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  bool trainable = true;
};

template <class T>
using ParamList = std::vector<ParamRef<T>>;

template <class T>
inline void zero_grads(ParamList<T>& params) {
  for (auto& p : params)
    if (p.grad) p.grad->fill(T(0));
}

template <class T>
inline std::size_t trainable_count(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params)
    if (p.trainable) n += p.value->numel();
  return n;
}

template <class T>
inline void kaiming_init(Tensor<T>& w, int fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : w.data) v = static_cast<T>(rng.normal(0.0, std));
}

// --- convolution ------------------------------------------------------------

template <class T>
struct Conv2d {
  int in_ch = 0, out_ch = 0, ksize = 0, stride = 1, pad = 0;
  bool has_bias = false;
  Tensor<T> w;   // [OC, IC, K, K]
  Tensor<T> b;   // [OC]
  Tensor<T> gw;
  Tensor<T> gb;

  Tensor<T> x_cache;  // input kept for the backward pass; cols are recomputed
  int out_h = 0, out_w = 0;

  Conv2d() = default;
  Conv2d(int ic, int oc, int k, int s = 1, int p = 0, bool bias = false)
      : in_ch(ic), out_ch(oc), ksize(k), stride(s), pad(p), has_bias(bias),
        w({oc, ic, k, k}), gw({oc, ic, k, k}) {
    if (bias) {
      b = Tensor<T>({oc});
      gb = Tensor<T>({oc});
    }
  }

  void init(Rng& rng) { kaiming_init(w, in_ch * ksize * ksize, rng); }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &w, &gw, true});
    if (has_bias) out.push_back({prefix + ".bias", &b, &gb, true});
  }

  int out_dim(int in_dim) const { return (in_dim + 2 * pad - ksize) / stride + 1; }

  void im2col(const T* x, int h, int w_in, T* cols) const {
    const int oh = (h + 2 * pad - ksize) / stride + 1;
    const int ow = (w_in + 2 * pad - ksize) / stride + 1;
    for (int c = 0; c < in_ch; ++c) {
      const T* xc = x + static_cast<std::size_t>(c) * h * w_in;
      for (int ki = 0; ki < ksize; ++ki) {
        for (int kj = 0; kj < ksize; ++kj) {
          T* row = cols + (static_cast<std::size_t>((c * ksize + ki) * ksize + kj)) * oh * ow;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ki;
            if (iy < 0 || iy >= h) {
              std::fill(row + static_cast<std::size_t>(oy) * ow,
                        row + static_cast<std::size_t>(oy + 1) * ow, T(0));
              continue;
            }
            const T* src = xc + static_cast<std::size_t>(iy) * w_in;
            T* dst = row + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kj;
              dst[ox] = (ix >= 0 && ix < w_in) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }

  void col2im(const T* cols, int h, int w_in, T* gx) const {
    const int oh = (h + 2 * pad - ksize) / stride + 1;
    const int ow = (w_in + 2 * pad - ksize) / stride + 1;
    for (int c = 0; c < in_ch; ++c) {
      T* gxc = gx + static_cast<std::size_t>(c) * h * w_in;
      for (int ki = 0; ki < ksize; ++ki) {
        for (int kj = 0; kj < ksize; ++kj) {
          const T* row = cols + (static_cast<std::size_t>((c * ksize + ki) * ksize + kj)) * oh * ow;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ki;
            if (iy < 0 || iy >= h) continue;
            T* dst = gxc + static_cast<std::size_t>(iy) * w_in;
            const T* src = row + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kj;
              if (ix >= 0 && ix < w_in) dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.ndim() != 4 || x.dim(1) != in_ch) throw ShapeError("conv input shape mismatch");
    const int n = x.dim(0), h = x.dim(2), w_in = x.dim(3);
    out_h = out_dim(h);
    out_w = out_dim(w_in);
    if (out_h <= 0 || out_w <= 0) throw ShapeError("conv output would be empty");
    Tensor<T> y({n, out_ch, out_h, out_w});

    const int ckk = in_ch * ksize * ksize;
    const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
    std::vector<T> cols(static_cast<std::size_t>(ckk) * plane);
    auto wm = as_matrix(w.ptr(), out_ch, ckk);
    for (int i = 0; i < n; ++i) {
      im2col(x.ptr() + static_cast<std::size_t>(i) * in_ch * h * w_in, h, w_in, cols.data());
      auto cm = as_matrix(cols.data(), ckk, static_cast<Eigen::Index>(plane));
      auto ym = as_matrix(y.ptr() + static_cast<std::size_t>(i) * out_ch * plane, out_ch,
                          static_cast<Eigen::Index>(plane));
      ym.noalias() = wm * cm;
      if (has_bias)
        for (int oc = 0; oc < out_ch; ++oc) ym.row(oc).array() += b[static_cast<std::size_t>(oc)];
    }
    if (train) x_cache = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = x_cache;
    const int n = x.dim(0), h = x.dim(2), w_in = x.dim(3);
    const int ckk = in_ch * ksize * ksize;
    const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
    Tensor<T> gx(x.shape);

    std::vector<T> cols(static_cast<std::size_t>(ckk) * plane);
    std::vector<T> gcols(static_cast<std::size_t>(ckk) * plane);
    auto wm = as_matrix(w.ptr(), out_ch, ckk);
    auto gwm = as_matrix(gw.ptr(), out_ch, ckk);
    for (int i = 0; i < n; ++i) {
      const T* xp = x.ptr() + static_cast<std::size_t>(i) * in_ch * h * w_in;
      auto gym = as_matrix(gy.ptr() + static_cast<std::size_t>(i) * out_ch * plane, out_ch,
                           static_cast<Eigen::Index>(plane));
      im2col(xp, h, w_in, cols.data());
      auto cm = as_matrix(cols.data(), ckk, static_cast<Eigen::Index>(plane));
      gwm.noalias() += gym * cm.transpose();
      if (has_bias)
        for (int oc = 0; oc < out_ch; ++oc) gb[static_cast<std::size_t>(oc)] += gym.row(oc).sum();
      auto gcm = as_matrix(gcols.data(), ckk, static_cast<Eigen::Index>(plane));
      gcm.noalias() = wm.transpose() * gym;
      col2im(gcols.data(), h, w_in, gx.ptr() + static_cast<std::size_t>(i) * in_ch * h * w_in);
    }
    return gx;
  }
};

// --- batch normalization ----------------------------------------------------

// Shared implementation for 2-d (NCHW, per-channel) and 1-d (ND, per-feature)
// batch norm. Spatial size is 1 in the 1-d case.
template <class T>
struct BatchNormBase {
  int channels = 0;
  double eps = 1e-5;
  double momentum = 0.1;
  Tensor<T> gamma, beta, ggamma, gbeta;
  Tensor<T> running_mean, running_var;

  Tensor<T> xhat_cache;
  std::vector<T> invstd_cache;
  bool train_cached = false;

  explicit BatchNormBase(int c = 0)
      : channels(c), gamma({c}), beta({c}), ggamma({c}), gbeta({c}), running_mean({c}),
        running_var({c}) {
    gamma.fill(T(1));
    running_var.fill(T(1));
  }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &gamma, &ggamma, true});
    out.push_back({prefix + ".bias", &beta, &gbeta, true});
    out.push_back({prefix + ".running_mean", &running_mean, nullptr, false});
    out.push_back({prefix + ".running_var", &running_var, nullptr, false});
  }

  // x viewed as [N, C, S]; stats per channel over N*S elements.
  Tensor<T> apply(const Tensor<T>& x, int n, int spatial, bool train) {
    Tensor<T> y(x.shape);
    const std::size_t cs = static_cast<std::size_t>(channels) * spatial;
    const std::size_t m = static_cast<std::size_t>(n) * spatial;
    if (train) {
      xhat_cache = Tensor<T>(x.shape);
      invstd_cache.assign(static_cast<std::size_t>(channels), T(0));
      train_cached = true;
      for (int c = 0; c < channels; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
          const T* p = x.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
          for (int s = 0; s < spatial; ++s) {
            sum += p[s];
            sq += static_cast<double>(p[s]) * p[s];
          }
        }
        const double mean = sum / static_cast<double>(m);
        const double var = std::max(0.0, sq / static_cast<double>(m) - mean * mean);
        const T invstd = static_cast<T>(1.0 / std::sqrt(var + eps));
        invstd_cache[static_cast<std::size_t>(c)] = invstd;
        const T g = gamma[static_cast<std::size_t>(c)], bb = beta[static_cast<std::size_t>(c)];
        for (int i = 0; i < n; ++i) {
          const T* p = x.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
          T* xh = xhat_cache.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
          T* yp = y.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
          for (int s = 0; s < spatial; ++s) {
            xh[s] = (p[s] - static_cast<T>(mean)) * invstd;
            yp[s] = g * xh[s] + bb;
          }
        }
        running_mean[static_cast<std::size_t>(c)] =
            static_cast<T>((1.0 - momentum) * running_mean[static_cast<std::size_t>(c)] +
                           momentum * mean);
        running_var[static_cast<std::size_t>(c)] = static_cast<T>(
            (1.0 - momentum) * running_var[static_cast<std::size_t>(c)] + momentum * var);
      }
    } else {
      for (int c = 0; c < channels; ++c) {
        const T invstd =
            static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[static_cast<std::size_t>(c)]) + eps));
        const T mean = running_mean[static_cast<std::size_t>(c)];
        const T g = gamma[static_cast<std::size_t>(c)], bb = beta[static_cast<std::size_t>(c)];
        for (int i = 0; i < n; ++i) {
          const T* p = x.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
          T* yp = y.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
          for (int s = 0; s < spatial; ++s) yp[s] = g * (p[s] - mean) * invstd + bb;
        }
      }
      train_cached = false;
    }
    return y;
  }

  Tensor<T> grad(const Tensor<T>& gy, int n, int spatial) {
    if (!train_cached) throw ConfigError("batch-norm backward without a training forward");
    Tensor<T> gx(gy.shape);
    const std::size_t cs = static_cast<std::size_t>(channels) * spatial;
    const T m = static_cast<T>(n) * static_cast<T>(spatial);
    for (int c = 0; c < channels; ++c) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int i = 0; i < n; ++i) {
        const T* g = gy.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
        const T* xh = xhat_cache.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
        for (int s = 0; s < spatial; ++s) {
          sum_gy += g[s];
          sum_gy_xhat += static_cast<double>(g[s]) * xh[s];
        }
      }
      ggamma[static_cast<std::size_t>(c)] += static_cast<T>(sum_gy_xhat);
      gbeta[static_cast<std::size_t>(c)] += static_cast<T>(sum_gy);
      const T k = gamma[static_cast<std::size_t>(c)] * invstd_cache[static_cast<std::size_t>(c)] / m;
      const T sg = static_cast<T>(sum_gy);
      const T sgx = static_cast<T>(sum_gy_xhat);
      for (int i = 0; i < n; ++i) {
        const T* g = gy.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
        const T* xh = xhat_cache.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
        T* gx_p = gx.ptr() + i * cs + static_cast<std::size_t>(c) * spatial;
        for (int s = 0; s < spatial; ++s) gx_p[s] = k * (m * g[s] - sg - xh[s] * sgx);
      }
    }
    return gx;
  }
};

template <class T>
struct BatchNorm2d : BatchNormBase<T> {
  using BatchNormBase<T>::BatchNormBase;

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.ndim() != 4 || x.dim(1) != this->channels) throw ShapeError("batch-norm-2d shape mismatch");
    return this->apply(x, x.dim(0), x.dim(2) * x.dim(3), train);
  }
  Tensor<T> backward(const Tensor<T>& gy) { return this->grad(gy, gy.dim(0), gy.dim(2) * gy.dim(3)); }
};

template <class T>
struct BatchNorm1d : BatchNormBase<T> {
  using BatchNormBase<T>::BatchNormBase;

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.ndim() != 2 || x.dim(1) != this->channels) throw ShapeError("batch-norm-1d shape mismatch");
    return this->apply(x, x.dim(0), 1, train);
  }
  Tensor<T> backward(const Tensor<T>& gy) { return this->grad(gy, gy.dim(0), 1); }
};

// --- activations and pooling -------------------------------------------------

template <class T>
struct ReLU {
  std::vector<bool> mask;

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> y(x.shape);
    if (train) mask.assign(x.numel(), false);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const bool pos = x[i] > T(0);
      y[i] = pos ? x[i] : T(0);
      if (train && pos) mask[i] = true;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.numel(); ++i) gx[i] = mask[i] ? gy[i] : T(0);
    return gx;
  }

  // In-place variants used where the producing layer's output is discarded.
  void forward_inplace(Tensor<T>& x, bool train) {
    if (train) mask.assign(x.numel(), false);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (x[i] > T(0)) {
        if (train) mask[i] = true;
      } else {
        x[i] = T(0);
      }
    }
  }

  void backward_inplace(Tensor<T>& gy) {
    for (std::size_t i = 0; i < gy.numel(); ++i)
      if (!mask[i]) gy[i] = T(0);
  }
};

template <class T>
struct MaxPool2d {
  int ksize = 2, stride = 2, pad = 0;
  std::vector<std::int32_t> argmax;
  std::vector<int> in_shape;

  MaxPool2d() = default;
  MaxPool2d(int k, int s, int p = 0) : ksize(k), stride(s), pad(p) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = (h + 2 * pad - ksize) / stride + 1;
    const int ow = (w + 2 * pad - ksize) / stride + 1;
    Tensor<T> y({n, c, oh, ow});
    if (train) {
      argmax.assign(y.numel(), 0);
      in_shape = x.shape;
    }
    std::size_t oi = 0;
    for (int i = 0; i < n; ++i)
      for (int cc = 0; cc < c; ++cc) {
        const T* xp = x.ptr() + (static_cast<std::size_t>(i) * c + cc) * h * w;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox, ++oi) {
            T best = -std::numeric_limits<T>::infinity();
            int best_idx = 0;
            for (int ki = 0; ki < ksize; ++ki) {
              const int iy = oy * stride - pad + ki;
              if (iy < 0 || iy >= h) continue;
              for (int kj = 0; kj < ksize; ++kj) {
                const int ix = ox * stride - pad + kj;
                if (ix < 0 || ix >= w) continue;
                const T v = xp[iy * w + ix];
                if (v > best) {
                  best = v;
                  best_idx = iy * w + ix;
                }
              }
            }
            y[oi] = best;
            if (train) argmax[oi] = best_idx;
          }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = in_shape[0], c = in_shape[1], h = in_shape[2], w = in_shape[3];
    Tensor<T> gx(in_shape);
    const std::size_t per = gy.numel() / (static_cast<std::size_t>(n) * c);
    std::size_t oi = 0;
    for (int i = 0; i < n; ++i)
      for (int cc = 0; cc < c; ++cc) {
        T* gxp = gx.ptr() + (static_cast<std::size_t>(i) * c + cc) * h * w;
        for (std::size_t s = 0; s < per; ++s, ++oi) gxp[argmax[oi]] += gy[oi];
      }
    return gx;
  }
};

// 2x2 average pooling, stride 2. Input spatial dims must be even.
template <class T>
struct AvgPool2 {
  std::vector<int> in_shape;

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 != 0 || w % 2 != 0) throw ShapeError("avg-pool input dims must be even");
    Tensor<T> y({n, c, h / 2, w / 2});
    if (train) in_shape = x.shape;
    const int oh = h / 2, ow = w / 2;
    for (int i = 0; i < n * c; ++i) {
      const T* xp = x.ptr() + static_cast<std::size_t>(i) * h * w;
      T* yp = y.ptr() + static_cast<std::size_t>(i) * oh * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          yp[oy * ow + ox] = (xp[(2 * oy) * w + 2 * ox] + xp[(2 * oy) * w + 2 * ox + 1] +
                              xp[(2 * oy + 1) * w + 2 * ox] + xp[(2 * oy + 1) * w + 2 * ox + 1]) *
                             T(0.25);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = in_shape[0], c = in_shape[1], h = in_shape[2], w = in_shape[3];
    Tensor<T> gx(in_shape);
    const int oh = h / 2, ow = w / 2;
    for (int i = 0; i < n * c; ++i) {
      const T* gp = gy.ptr() + static_cast<std::size_t>(i) * oh * ow;
      T* gxp = gx.ptr() + static_cast<std::size_t>(i) * h * w;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const T v = gp[oy * ow + ox] * T(0.25);
          gxp[(2 * oy) * w + 2 * ox] = v;
          gxp[(2 * oy) * w + 2 * ox + 1] = v;
          gxp[(2 * oy + 1) * w + 2 * ox] = v;
          gxp[(2 * oy + 1) * w + 2 * ox + 1] = v;
        }
    }
    return gx;
  }
};

// Nearest-neighbour 2x upsampling.
template <class T>
struct Upsample2 {
  Tensor<T> forward(const Tensor<T>& x) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor<T> y({n, c, h * 2, w * 2});
    for (int i = 0; i < n * c; ++i) {
      const T* xp = x.ptr() + static_cast<std::size_t>(i) * h * w;
      T* yp = y.ptr() + static_cast<std::size_t>(i) * h * w * 4;
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          const T v = xp[yy * w + xx];
          yp[(2 * yy) * 2 * w + 2 * xx] = v;
          yp[(2 * yy) * 2 * w + 2 * xx + 1] = v;
          yp[(2 * yy + 1) * 2 * w + 2 * xx] = v;
          yp[(2 * yy + 1) * 2 * w + 2 * xx + 1] = v;
        }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = gy.dim(0), c = gy.dim(1), h = gy.dim(2) / 2, w = gy.dim(3) / 2;
    Tensor<T> gx({n, c, h, w});
    for (int i = 0; i < n * c; ++i) {
      const T* gp = gy.ptr() + static_cast<std::size_t>(i) * h * w * 4;
      T* gxp = gx.ptr() + static_cast<std::size_t>(i) * h * w;
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          gxp[yy * w + xx] = gp[(2 * yy) * 2 * w + 2 * xx] + gp[(2 * yy) * 2 * w + 2 * xx + 1] +
                             gp[(2 * yy + 1) * 2 * w + 2 * xx] +
                             gp[(2 * yy + 1) * 2 * w + 2 * xx + 1];
    }
    return gx;
  }
};

template <class T>
struct GlobalAvgPool {
  std::vector<int> in_shape;

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    const int n = x.dim(0), c = x.dim(1);
    const int hw = x.dim(2) * x.dim(3);
    if (train) in_shape = x.shape;
    Tensor<T> y({n, c});
    const T inv = T(1) / static_cast<T>(hw);
    for (int i = 0; i < n * c; ++i) {
      const T* xp = x.ptr() + static_cast<std::size_t>(i) * hw;
      T s = T(0);
      for (int j = 0; j < hw; ++j) s += xp[j];
      y[static_cast<std::size_t>(i)] = s * inv;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape);
    const int hw = in_shape[2] * in_shape[3];
    const T inv = T(1) / static_cast<T>(hw);
    for (std::size_t i = 0; i < gy.numel(); ++i) {
      T* gxp = gx.ptr() + i * static_cast<std::size_t>(hw);
      const T v = gy[i] * inv;
      for (int j = 0; j < hw; ++j) gxp[j] = v;
    }
    return gx;
  }
};

// --- linear -------------------------------------------------------------------

template <class T>
struct Linear {
  int in_dim = 0, out_dim = 0;
  Tensor<T> w;  // [out, in]
  Tensor<T> b;  // [out]
  Tensor<T> gw, gb;
  Tensor<T> x_cache;

  Linear() = default;
  Linear(int in, int out)
      : in_dim(in), out_dim(out), w({out, in}), b({out}), gw({out, in}), gb({out}) {}

  void init(Rng& rng) { kaiming_init(w, in_dim, rng); }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &w, &gw, true});
    out.push_back({prefix + ".bias", &b, &gb, true});
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.ndim() != 2 || x.dim(1) != in_dim) throw ShapeError("linear input shape mismatch");
    const int n = x.dim(0);
    Tensor<T> y({n, out_dim});
    auto xm = as_matrix(x.ptr(), n, in_dim);
    auto wm = as_matrix(w.ptr(), out_dim, in_dim);
    auto ym = as_matrix(y.ptr(), n, out_dim);
    ym.noalias() = xm * wm.transpose();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < out_dim; ++j) y.at(i, j) += b[static_cast<std::size_t>(j)];
    if (train) x_cache = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = gy.dim(0);
    Tensor<T> gx({n, in_dim});
    auto gym = as_matrix(gy.ptr(), n, out_dim);
    auto xm = as_matrix(x_cache.ptr(), n, in_dim);
    auto wm = as_matrix(w.ptr(), out_dim, in_dim);
    auto gwm = as_matrix(gw.ptr(), out_dim, in_dim);
    auto gxm = as_matrix(gx.ptr(), n, in_dim);
    gwm.noalias() += gym.transpose() * xm;
    gxm.noalias() = gym * wm;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < out_dim; ++j) gb[static_cast<std::size_t>(j)] += gy.at(i, j);
    return gx;
  }
};

// --- channel concat (skip connections) ----------------------------------------

template <class T>
inline Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw ShapeError("concat requires matching batch and spatial dims");
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  Tensor<T> y({n, ca + cb, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int i = 0; i < n; ++i) {
    std::copy(a.ptr() + i * ca * plane, a.ptr() + (i + 1) * ca * plane,
              y.ptr() + static_cast<std::size_t>(i) * (ca + cb) * plane);
    std::copy(b.ptr() + i * cb * plane, b.ptr() + (i + 1) * cb * plane,
              y.ptr() + static_cast<std::size_t>(i) * (ca + cb) * plane + ca * plane);
  }
  return y;
}

template <class T>
inline void split_channels_grad(const Tensor<T>& gy, int ca, Tensor<T>& ga, Tensor<T>& gb) {
  const int n = gy.dim(0), c = gy.dim(1), h = gy.dim(2), w = gy.dim(3);
  const int cb = c - ca;
  ga = Tensor<T>({n, ca, h, w});
  gb = Tensor<T>({n, cb, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int i = 0; i < n; ++i) {
    const T* src = gy.ptr() + static_cast<std::size_t>(i) * c * plane;
    std::copy(src, src + ca * plane, ga.ptr() + static_cast<std::size_t>(i) * ca * plane);
    std::copy(src + ca * plane, src + c * plane, gb.ptr() + static_cast<std::size_t>(i) * cb * plane);
  }
}

}  // namespace stainco::nn
