#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stainco/nn/layers.hpp"

namespace stainco::nn {

// Sums the R, G and B kernels of a 3-channel first convolution into a single
// 1-channel kernel; adapts pretrained RGB stems to single-channel inputs.
// By linearity, a gray image (R=G=B) convolved with the result equals the
// original convolution of the 3-channel image.
template <class T>
Tensor<T> adapt_first_layer(const Tensor<T>& kernels) {
  if (kernels.ndim() != 4 || kernels.dim(1) != 3)
    throw ShapeError("adapt_first_layer expects K x 3 x k x k kernels");
  const int oc = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  Tensor<T> out({oc, 1, kh, kw});
  const std::size_t plane = static_cast<std::size_t>(kh) * kw;
  for (int o = 0; o < oc; ++o) {
    const T* src = kernels.ptr() + static_cast<std::size_t>(o) * 3 * plane;
    T* dst = out.ptr() + static_cast<std::size_t>(o) * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] + src[plane + i] + src[2 * plane + i];
  }
  return out;
}

// Architecture description for the residual encoder family.
struct ResnetConfig {
  std::string id = "small16";
  int in_channels = 3;
  int stem_width = 16;
  int stem_kernel = 3;
  int stem_stride = 1;
  int stem_pad = 1;
  bool stem_pool = false;  // 3x3/2 max pool after the stem (resnet18 style)
  std::vector<int> widths{16, 32, 64};
  std::vector<int> blocks{1, 1, 1};

  int feature_dim() const { return widths.back(); }

  static ResnetConfig resnet18(int in_ch) {
    ResnetConfig c;
    c.id = "resnet18";
    c.in_channels = in_ch;
    c.stem_width = 64;
    c.stem_kernel = 7;
    c.stem_stride = 2;
    c.stem_pad = 3;
    c.stem_pool = true;
    c.widths = {64, 128, 256, 512};
    c.blocks = {2, 2, 2, 2};
    return c;
  }

  // CIFAR-style small encoder: 3x3 stem, three stages, strides 1/2/2.
  static ResnetConfig small(int in_ch, int base_width, int blocks_per_stage) {
    ResnetConfig c;
    c.id = "small" + std::to_string(base_width);
    c.in_channels = in_ch;
    c.stem_width = base_width;
    c.widths = {base_width, base_width * 2, base_width * 4};
    c.blocks = {blocks_per_stage, blocks_per_stage, blocks_per_stage};
    return c;
  }

  static ResnetConfig from_architecture(const std::string& arch, int in_ch, int base_width = 16,
                                        int blocks_per_stage = 1) {
    if (arch == "resnet18") return resnet18(in_ch);
    if (arch == "small" || arch.rfind("small", 0) == 0) return small(in_ch, base_width, blocks_per_stage);
    throw ConfigError("unknown encoder architecture: " + arch);
  }
};

// Pre-activation-free basic residual block: conv-bn-relu-conv-bn (+ projection
// shortcut when shape changes), then relu.
template <class T>
struct BasicBlock {
  Conv2d<T> conv1, conv2;
  BatchNorm2d<T> bn1, bn2;
  ReLU<T> relu1, relu2;
  bool has_proj = false;
  Conv2d<T> proj;
  BatchNorm2d<T> proj_bn;

  BasicBlock(int in_ch, int out_ch, int stride)
      : conv1(in_ch, out_ch, 3, stride, 1),
        conv2(out_ch, out_ch, 3, 1, 1),
        bn1(out_ch),
        bn2(out_ch),
        has_proj(stride != 1 || in_ch != out_ch),
        proj(in_ch, out_ch, 1, stride, 0),
        proj_bn(out_ch) {}

  void init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    if (has_proj) proj.init(rng);
  }

  void collect(ParamList<T>& out, const std::string& prefix) {
    conv1.collect(out, prefix + ".conv1");
    bn1.collect(out, prefix + ".bn1");
    conv2.collect(out, prefix + ".conv2");
    bn2.collect(out, prefix + ".bn2");
    if (has_proj) {
      proj.collect(out, prefix + ".proj");
      proj_bn.collect(out, prefix + ".proj_bn");
    }
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> y = bn1.forward(conv1.forward(x, train), train);
    relu1.forward_inplace(y, train);
    y = bn2.forward(conv2.forward(y, train), train);
    Tensor<T> skip = has_proj ? proj_bn.forward(proj.forward(x, train), train) : x;
    if (!y.same_shape(skip)) throw ShapeError("residual shapes diverged");
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] += skip[i];
    relu2.forward_inplace(y, train);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy_in) {
    Tensor<T> gy = gy_in;
    relu2.backward_inplace(gy);
    // main path
    Tensor<T> g = conv2.backward(bn2.backward(gy));
    relu1.backward_inplace(g);
    Tensor<T> gx = conv1.backward(bn1.backward(g));
    // shortcut
    if (has_proj) {
      Tensor<T> gs = proj.backward(proj_bn.backward(gy));
      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gs[i];
    } else {
      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gy[i];
    }
    return gx;
  }
};

// Residual encoder: stem, stages of basic blocks, global average pooling.
// forward() yields the pooled feature vector [N, feature_dim].
template <class T>
struct ResNetEncoder {
  ResnetConfig cfg;
  Conv2d<T> stem;
  BatchNorm2d<T> stem_bn;
  ReLU<T> stem_relu;
  MaxPool2d<T> pool;
  std::vector<std::unique_ptr<BasicBlock<T>>> body;
  GlobalAvgPool<T> gap;

  explicit ResNetEncoder(const ResnetConfig& c)
      : cfg(c),
        stem(c.in_channels, c.stem_width, c.stem_kernel, c.stem_stride, c.stem_pad),
        stem_bn(c.stem_width),
        pool(3, 2, 1) {
    int ch = c.stem_width;
    for (std::size_t s = 0; s < c.widths.size(); ++s) {
      const int width = c.widths[s];
      for (int b = 0; b < c.blocks[s]; ++b) {
        const int stride = (b == 0 && s > 0) ? 2 : 1;
        body.push_back(std::make_unique<BasicBlock<T>>(ch, width, stride));
        ch = width;
      }
    }
  }

  int feature_dim() const { return cfg.feature_dim(); }

  void init(Rng& rng) {
    stem.init(rng);
    for (auto& b : body) b->init(rng);
  }

  void collect(ParamList<T>& out, const std::string& prefix) {
    stem.collect(out, prefix + ".stem");
    stem_bn.collect(out, prefix + ".stem_bn");
    for (std::size_t i = 0; i < body.size(); ++i)
      body[i]->collect(out, prefix + ".block" + std::to_string(i));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> y = stem_bn.forward(stem.forward(x, train), train);
    stem_relu.forward_inplace(y, train);
    if (cfg.stem_pool) y = pool.forward(y, train);
    for (auto& b : body) y = b->forward(y, train);
    return gap.forward(y, train);
  }

  Tensor<T> backward(const Tensor<T>& gfeat) {
    Tensor<T> g = gap.backward(gfeat);
    for (auto it = body.rbegin(); it != body.rend(); ++it) g = (*it)->backward(g);
    if (cfg.stem_pool) g = pool.backward(g);
    stem_relu.backward_inplace(g);
    return stem.backward(stem_bn.backward(g));
  }
};

}  // namespace stainco::nn
