#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "stainco/nn/adam.hpp"
#include "stainco/nn/resnet.hpp"

namespace stainco {

enum class VariantKind {
  dual_he_cotrain,
  rgb_baseline,
  h_only,
  e_only,
  two_channel_baseline,
  dual_channel_pair_cotrain,
};

inline std::string to_string(VariantKind k) {
  switch (k) {
    case VariantKind::dual_he_cotrain: return "dual_he_cotrain";
    case VariantKind::rgb_baseline: return "rgb_baseline";
    case VariantKind::h_only: return "h_only";
    case VariantKind::e_only: return "e_only";
    case VariantKind::two_channel_baseline: return "two_channel_baseline";
    case VariantKind::dual_channel_pair_cotrain: return "dual_channel_pair_cotrain";
  }
  throw ConfigError("bad variant kind");
}

inline VariantKind variant_from_string(const std::string& s) {
  for (auto k : {VariantKind::dual_he_cotrain, VariantKind::rgb_baseline, VariantKind::h_only,
                 VariantKind::e_only, VariantKind::two_channel_baseline,
                 VariantKind::dual_channel_pair_cotrain})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown variant kind: " + s);
}

inline bool variant_is_dual(VariantKind k) {
  return k == VariantKind::dual_he_cotrain || k == VariantKind::dual_channel_pair_cotrain;
}

// Channel letters each branch consumes. channel_pair selects the RGB subset
// for the pair variants (e.g. "RB").
inline std::vector<std::string> variant_branches(VariantKind k, const std::string& channel_pair) {
  auto valid_pair = [&](std::size_t want) {
    if (channel_pair.size() != want) throw ConfigError("variant needs a channel pair like \"RB\"");
    for (char c : channel_pair)
      if (c != 'R' && c != 'G' && c != 'B') throw ConfigError("channel pair must use R, G, B");
    if (channel_pair[0] == channel_pair[1]) throw ConfigError("channel pair must be distinct");
  };
  switch (k) {
    case VariantKind::dual_he_cotrain: return {"H", "E"};
    case VariantKind::rgb_baseline: return {"RGB"};
    case VariantKind::h_only: return {"H"};
    case VariantKind::e_only: return {"E"};
    case VariantKind::two_channel_baseline:
      valid_pair(2);
      return {channel_pair};
    case VariantKind::dual_channel_pair_cotrain:
      valid_pair(2);
      return {std::string(1, channel_pair[0]), std::string(1, channel_pair[1])};
  }
  throw ConfigError("bad variant kind");
}

struct EncoderSpec {
  std::string architecture = "small";
  int in_channels = 0;   // 0 = derive from variant
  int feature_dim = 0;   // 0 = derive from architecture
  int base_width = 16;
  int blocks_per_stage = 1;
  std::string pretrained_source;  // optional checkpoint with a 3-channel encoder
};

struct DualFeatures {
  TensorF f_h;
  TensorF f_e;
};

// A classification model: one or two residual encoders, per-branch feature
// batch norm for the co-training variants, and a shared linear head over the
// averaged feature.
template <class T>
struct Model {
  VariantKind kind;
  EncoderSpec spec;
  std::string channel_pair;
  std::vector<std::string> branch_channels;
  std::vector<std::unique_ptr<nn::ResNetEncoder<T>>> encoders;
  std::vector<std::unique_ptr<nn::BatchNorm1d<T>>> feat_bn;  // dual variants only
  nn::Linear<T> head;
  int n_classes = 2;

  bool is_dual() const { return encoders.size() == 2; }
  int feature_dim() const { return encoders.front()->feature_dim(); }

  nn::ParamList<T> params() {
    nn::ParamList<T> out;
    static const char* branch_names[2] = {"branch0", "branch1"};
    for (std::size_t i = 0; i < encoders.size(); ++i) {
      encoders[i]->collect(out, std::string(branch_names[i]) + ".enc");
      if (i < feat_bn.size()) feat_bn[i]->collect(out, std::string(branch_names[i]) + ".feat_bn");
    }
    head.collect(out, "head");
    return out;
  }

  // Branch forward: encoder then (for dual variants) feature batch norm.
  Tensor<T> forward_branch(std::size_t branch, const Tensor<T>& x, bool train) {
    Tensor<T> f = encoders[branch]->forward(x, train);
    if (branch < feat_bn.size()) f = feat_bn[branch]->forward(f, train);
    return f;
  }

  Tensor<T> backward_branch(std::size_t branch, const Tensor<T>& gfeat) {
    Tensor<T> g = gfeat;
    if (branch < feat_bn.size()) g = feat_bn[branch]->backward(g);
    return encoders[branch]->backward(g);
  }

  // Dual forward over a batched stain (or channel) pair.
  DualFeatures forward_dual_f(const TensorF& h, const TensorF& e, bool train)
    requires std::is_same_v<T, float>
  {
    if (!is_dual()) throw ConfigError("forward_dual on a single-branch model");
    if (h.dim(0) != e.dim(0) || h.dim(2) != e.dim(2) || h.dim(3) != e.dim(3))
      throw ShapeError("paired branches require matching batch and spatial dims");
    DualFeatures df;
    df.f_h = forward_branch(0, h, train);
    df.f_e = forward_branch(1, e, train);
    return df;
  }

  Tensor<T> average_features(const Tensor<T>& f_h, const Tensor<T>& f_e) const {
    if (!f_h.same_shape(f_e)) throw ShapeError("feature matrices must match");
    Tensor<T> avg(f_h.shape);
    for (std::size_t i = 0; i < avg.numel(); ++i) avg[i] = T(0.5) * (f_h[i] + f_e[i]);
    return avg;
  }

  Tensor<T> logits(const Tensor<T>& features, bool train) { return head.forward(features, train); }

  // Class probabilities from a single feature matrix.
  Tensor<T> classify(const Tensor<T>& features) {
    Tensor<T> z = head.forward(features, false);
    Tensor<T> p(z.shape);
    const int n = z.dim(0), c = z.dim(1);
    for (int i = 0; i < n; ++i) {
      T mx = z.at(i, 0);
      for (int j = 1; j < c; ++j) mx = std::max(mx, z.at(i, j));
      T sum = T(0);
      for (int j = 0; j < c; ++j) {
        p.at(i, j) = std::exp(z.at(i, j) - mx);
        sum += p.at(i, j);
      }
      for (int j = 0; j < c; ++j) p.at(i, j) /= sum;
    }
    return p;
  }

  // Dual mode: average the two feature sets, then the same linear+softmax.
  Tensor<T> classify(const DualFeatures& df)
    requires std::is_same_v<T, float>
  {
    return classify(average_features(df.f_h, df.f_e));
  }
};

using ModelF = Model<float>;

inline int variant_in_channels(VariantKind k) {
  switch (k) {
    case VariantKind::rgb_baseline: return 3;
    case VariantKind::two_channel_baseline: return 2;
    default: return 1;  // single-channel branches
  }
}

// Builds a trainable model for one experiment variant. Parameters are
// initialized from `seed`; dual variants draw separate parameters per branch.
inline ModelF build_variant(VariantKind kind, const EncoderSpec& spec_in,
                            const std::string& channel_pair = "", std::uint64_t seed = 0) {
  EncoderSpec spec = spec_in;
  const int want_in = variant_in_channels(kind);
  if (spec.in_channels == 0) spec.in_channels = want_in;
  if (spec.in_channels != want_in)
    throw ConfigError("in_channels=" + std::to_string(spec.in_channels) + " inconsistent with " +
                      to_string(kind));

  nn::ResnetConfig rc = nn::ResnetConfig::from_architecture(spec.architecture, spec.in_channels,
                                                            spec.base_width, spec.blocks_per_stage);
  if (spec.feature_dim == 0) spec.feature_dim = rc.feature_dim();
  if (spec.feature_dim != rc.feature_dim())
    throw ConfigError("feature_dim " + std::to_string(spec.feature_dim) +
                      " does not match architecture width " + std::to_string(rc.feature_dim()));

  ModelF m;
  m.kind = kind;
  m.spec = spec;
  m.channel_pair = channel_pair;
  m.branch_channels = variant_branches(kind, channel_pair);
  const std::size_t n_branches = m.branch_channels.size();
  for (std::size_t i = 0; i < n_branches; ++i) {
    m.encoders.push_back(std::make_unique<nn::ResNetEncoder<float>>(rc));
    Rng rng(derive_seed(seed, "model-init", i));
    m.encoders[i]->init(rng);
    if (variant_is_dual(kind)) m.feat_bn.push_back(std::make_unique<nn::BatchNorm1d<float>>(rc.feature_dim()));
  }
  m.head = nn::Linear<float>(rc.feature_dim(), m.n_classes);
  Rng head_rng(derive_seed(seed, "model-init-head"));
  m.head.init(head_rng);
  return m;
}

}  // namespace stainco
