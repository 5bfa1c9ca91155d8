#pragma once

#include <cmath>
#include <vector>

#include "ddad/layers.hpp"

namespace ddad {

// Adam with optional L2 weight decay folded into the gradient.
template <typename T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>>& params, double lr, double weight_decay = 0.0,
       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(params), lr_(lr), wd_(weight_decay), beta1_(beta1),
        beta2_(beta2), eps_(eps) {
    for (auto& p : params_) {
      if (!p.trainable) continue;
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    size_t slot = 0;
    for (auto& p : params_) {
      if (!p.trainable) continue;
      Tensor<T>& m = m_[slot];
      Tensor<T>& v = v_[slot];
      ++slot;
      for (int64_t i = 0; i < p.value->numel(); ++i) {
        double g = (*p.grad)[i];
        if (wd_ != 0.0) g += wd_ * (*p.value)[i];
        const double mi = beta1_ * m[i] + (1.0 - beta1_) * g;
        const double vi = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        (*p.value)[i] -= static_cast<T>(lr_ * (mi / bc1) /
                                        (std::sqrt(vi / bc2) + eps_));
      }
    }
  }

 private:
  std::vector<ParamRef<T>>& params_;
  double lr_, wd_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace ddad
