#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "stainco/tensor.hpp"

namespace stainco {

// Margin and mixing weight of the co-training objective. lambda follows the
// 0.2 * p rule unless set explicitly.
struct CoTrainHyperparams {
  double margin = 40.0;
  double lambda = 0.2;
};

inline double lambda_from_label_fraction(double p) {
  if (!(p > 0.0) || p > 1.0) throw ConfigError("label fraction must lie in (0, 1]");
  return 0.2 * p;
}

namespace detail {

template <class T>
inline T row_distance(const T* a, const T* b, int d) {
  T s = T(0);
  for (int j = 0; j < d; ++j) {
    const T diff = a[j] - b[j];
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace detail

// Triplet co-training loss over one batch of paired features:
//   mean_i max(||f_h[i] - f_e[i]|| - ||f_h[i] - f_e[neg[i]]|| + m, 0).
// negatives must be a derangement of the batch indices. When grad_h/grad_e
// are given they receive the analytic gradients (overwritten, not
// accumulated). At zero distance the norm's subgradient is taken as zero.
template <class T>
T triplet_cotrain_loss(const Tensor<T>& f_h, const Tensor<T>& f_e, std::span<const int> negatives,
                       T margin, Tensor<T>* grad_h = nullptr, Tensor<T>* grad_e = nullptr) {
  if (f_h.ndim() != 2 || !f_h.same_shape(f_e)) throw ShapeError("feature matrices must match (N x D)");
  const int n = f_h.dim(0);
  const int d = f_h.dim(1);
  if (n < 2) throw ConfigError("triplet loss needs a batch of at least 2");
  if (static_cast<int>(negatives.size()) != n) throw ShapeError("negative map size mismatch");
  for (int i = 0; i < n; ++i) {
    const int k = negatives[static_cast<std::size_t>(i)];
    if (k < 0 || k >= n || k == i) throw ConfigError("negative map must be a derangement");
  }

  if (grad_h) {
    if (!grad_h->same_shape(f_h)) *grad_h = Tensor<T>(f_h.shape);
    grad_h->fill(T(0));
  }
  if (grad_e) {
    if (!grad_e->same_shape(f_e)) *grad_e = Tensor<T>(f_e.shape);
    grad_e->fill(T(0));
  }

  const T inv_n = T(1) / static_cast<T>(n);
  T total = T(0);
  for (int i = 0; i < n; ++i) {
    const int k = negatives[static_cast<std::size_t>(i)];
    const T* fh_i = f_h.ptr() + static_cast<std::size_t>(i) * d;
    const T* fe_i = f_e.ptr() + static_cast<std::size_t>(i) * d;
    const T* fe_k = f_e.ptr() + static_cast<std::size_t>(k) * d;
    const T d_pos = detail::row_distance(fh_i, fe_i, d);
    const T d_neg = detail::row_distance(fh_i, fe_k, d);
    const T hinge = d_pos - d_neg + margin;
    if (hinge <= T(0)) continue;
    total += hinge;
    if (!grad_h && !grad_e) continue;

    T* gh_i = grad_h ? grad_h->ptr() + static_cast<std::size_t>(i) * d : nullptr;
    T* ge_i = grad_e ? grad_e->ptr() + static_cast<std::size_t>(i) * d : nullptr;
    T* ge_k = grad_e ? grad_e->ptr() + static_cast<std::size_t>(k) * d : nullptr;
    const T wp = d_pos > T(0) ? inv_n / d_pos : T(0);
    const T wn = d_neg > T(0) ? inv_n / d_neg : T(0);
    for (int j = 0; j < d; ++j) {
      const T up = (fh_i[j] - fe_i[j]) * wp;
      const T un = (fh_i[j] - fe_k[j]) * wn;
      if (gh_i) gh_i[j] += up - un;
      if (ge_i) ge_i[j] -= up;
      if (ge_k) ge_k[j] += un;
    }
  }
  return total * inv_n;
}

// Mean negative log-likelihood of the true class under softmax(logits).
// Optional gradient w.r.t. the logits ((p - y) / N).
template <class T>
T softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                        Tensor<T>* grad_logits = nullptr) {
  if (logits.ndim() != 2) throw ShapeError("logits must be N x C");
  const int n = logits.dim(0);
  const int c = logits.dim(1);
  if (static_cast<int>(labels.size()) != n) throw ShapeError("label count mismatch");
  if (n == 0) throw ConfigError("cross-entropy over an empty batch");
  if (grad_logits) {
    if (!grad_logits->same_shape(logits)) *grad_logits = Tensor<T>(logits.shape);
  }

  const T inv_n = T(1) / static_cast<T>(n);
  T total = T(0);
  std::vector<T> p(static_cast<std::size_t>(c));
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw ConfigError("label out of range");
    const T* row = logits.ptr() + static_cast<std::size_t>(i) * c;
    T mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    T sum = T(0);
    for (int j = 0; j < c; ++j) {
      p[static_cast<std::size_t>(j)] = std::exp(row[j] - mx);
      sum += p[static_cast<std::size_t>(j)];
    }
    total -= (row[y] - mx) - std::log(sum);
    if (grad_logits) {
      T* g = grad_logits->ptr() + static_cast<std::size_t>(i) * c;
      for (int j = 0; j < c; ++j) g[j] = (p[static_cast<std::size_t>(j)] / sum) * inv_n;
      g[y] -= inv_n;
    }
  }
  return total * inv_n;
}

// Combined semi-supervised objective: supervised cross-entropy plus
// lambda-weighted triplet term. Both terms are batch means.
template <class T>
T combined_loss(const Tensor<T>& logits, std::span<const int> labels, T triplet, T lambda,
                Tensor<T>* grad_logits = nullptr) {
  const T ce = softmax_cross_entropy(logits, labels, grad_logits);
  return ce + lambda * triplet;
}

}  // namespace stainco
