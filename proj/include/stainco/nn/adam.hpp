#pragma once

#include <cmath>
#include <vector>

#include "stainco/nn/layers.hpp"

namespace stainco::nn {

// Adam with optional decoupled-from-nothing classic L2 (added to the
// gradient). State is keyed by position in the param list, which is stable
// for a given model.
template <class T>
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  long step_count = 0;

  std::vector<std::vector<T>> m_, v_;

  void step(ParamList<T>& params, double lr) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        m_[i].assign(params[i].value->numel(), T(0));
        v_[i].assign(params[i].value->numel(), T(0));
      }
    }
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      if (!p.trainable || !p.grad) continue;
      T* w = p.value->ptr();
      const T* g = p.grad->ptr();
      for (std::size_t j = 0; j < p.value->numel(); ++j) {
        double gj = static_cast<double>(g[j]);
        if (weight_decay != 0.0) gj += weight_decay * static_cast<double>(w[j]);
        m_[i][j] = static_cast<T>(beta1 * m_[i][j] + (1.0 - beta1) * gj);
        v_[i][j] = static_cast<T>(beta2 * v_[i][j] + (1.0 - beta2) * gj * gj);
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        w[j] = static_cast<T>(w[j] - lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }
};

}  // namespace stainco::nn
