#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stainco/nn/layers.hpp"

namespace stainco::nn {

struct UNetConfig {
  int in_channels = 1;
  int out_channels = 1;
  int base_width = 8;
  int levels = 3;  // resolution levels; levels-1 downsamplings

  int width_at(int level) const { return base_width << level; }
};

// Encoder-decoder image regressor with skip connections and a linear 1x1
// output layer. Input spatial dims must be divisible by 2^(levels-1).
template <class T>
struct UNetRegressor {
  struct Stage {
    Conv2d<T> conv;
    BatchNorm2d<T> bn;
    ReLU<T> relu;
    Stage(int in_ch, int out_ch) : conv(in_ch, out_ch, 3, 1, 1), bn(out_ch) {}

    Tensor<T> forward(const Tensor<T>& x, bool train) {
      Tensor<T> y = bn.forward(conv.forward(x, train), train);
      relu.forward_inplace(y, train);
      return y;
    }
    Tensor<T> backward(Tensor<T> gy) {
      relu.backward_inplace(gy);
      return conv.backward(bn.backward(gy));
    }
    void collect(ParamList<T>& out, const std::string& prefix) {
      conv.collect(out, prefix + ".conv");
      bn.collect(out, prefix + ".bn");
    }
    void init(Rng& rng) { conv.init(rng); }
  };

  UNetConfig cfg;
  std::vector<std::unique_ptr<Stage>> enc;
  std::vector<std::unique_ptr<Stage>> dec;  // dec[i] consumes up(level i+1) ++ enc[i]
  std::vector<AvgPool2<T>> down;
  std::vector<Upsample2<T>> up;
  Conv2d<T> head;  // linear output

  std::vector<Tensor<T>> enc_out;  // forward cache for the skips

  explicit UNetRegressor(const UNetConfig& c)
      : cfg(c), head(c.base_width, c.out_channels, 1, 1, 0, /*bias=*/true) {
    int in_ch = c.in_channels;
    for (int l = 0; l < c.levels; ++l) {
      enc.push_back(std::make_unique<Stage>(in_ch, c.width_at(l)));
      in_ch = c.width_at(l);
    }
    down.resize(static_cast<std::size_t>(c.levels - 1));
    up.resize(static_cast<std::size_t>(c.levels - 1));
    for (int l = 0; l < c.levels - 1; ++l)
      dec.push_back(std::make_unique<Stage>(c.width_at(l + 1) + c.width_at(l), c.width_at(l)));
  }

  void init(Rng& rng) {
    for (auto& s : enc) s->init(rng);
    for (auto& s : dec) s->init(rng);
    head.init(rng);
  }

  void collect(ParamList<T>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < enc.size(); ++i)
      enc[i]->collect(out, prefix + ".enc" + std::to_string(i));
    for (std::size_t i = 0; i < dec.size(); ++i)
      dec[i]->collect(out, prefix + ".dec" + std::to_string(i));
    head.collect(out, prefix + ".head");
  }

  ParamList<T> params() {
    ParamList<T> out;
    collect(out, "unet");
    return out;
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    enc_out.assign(static_cast<std::size_t>(cfg.levels), Tensor<T>{});
    Tensor<T> y = x;
    for (int l = 0; l < cfg.levels; ++l) {
      y = enc[static_cast<std::size_t>(l)]->forward(y, train);
      enc_out[static_cast<std::size_t>(l)] = y;
      if (l + 1 < cfg.levels) y = down[static_cast<std::size_t>(l)].forward(y, train);
    }
    for (int l = cfg.levels - 2; l >= 0; --l) {
      Tensor<T> u = up[static_cast<std::size_t>(l)].forward(y);
      y = dec[static_cast<std::size_t>(l)]->forward(
          concat_channels(u, enc_out[static_cast<std::size_t>(l)]), train);
    }
    return head.forward(y, train);
  }

  void backward(const Tensor<T>& gy) {
    Tensor<T> g = head.backward(gy);
    std::vector<Tensor<T>> skip_grads(static_cast<std::size_t>(cfg.levels));
    for (int l = 0; l <= cfg.levels - 2; ++l) {
      Tensor<T> gcat = dec[static_cast<std::size_t>(l)]->backward(g);
      Tensor<T> gu, gskip;
      split_channels_grad(gcat, cfg.width_at(l + 1), gu, gskip);
      skip_grads[static_cast<std::size_t>(l)] = std::move(gskip);
      g = up[static_cast<std::size_t>(l)].backward(gu);
    }
    // g now targets enc_out[levels-1]; walk back down the encoder.
    for (int l = cfg.levels - 1; l >= 0; --l) {
      if (l < cfg.levels - 1) {
        g = down[static_cast<std::size_t>(l)].backward(g);
        Tensor<T>& sk = skip_grads[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += sk[i];
      }
      g = enc[static_cast<std::size_t>(l)]->backward(std::move(g));
    }
  }
};

// Pixel-wise mean squared error with optional gradient.
template <class T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad = nullptr) {
  if (!pred.same_shape(target)) throw ShapeError("mse shapes differ");
  if (pred.numel() == 0) throw ConfigError("mse over empty tensors");
  if (grad && !grad->same_shape(pred)) *grad = Tensor<T>(pred.shape);
  const T inv = T(1) / static_cast<T>(pred.numel());
  T total = T(0);
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const T d = pred[i] - target[i];
    total += d * d;
    if (grad) (*grad)[i] = T(2) * d * inv;
  }
  return total * inv;
}

}  // namespace stainco::nn
