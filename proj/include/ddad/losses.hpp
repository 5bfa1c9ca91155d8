#pragma once

#include <cmath>

#include "ddad/tensor.hpp"

namespace ddad {

// Mean over batch and pixels of the squared reconstruction error.
// grad_recon (optional out) receives dL/d(recon).
template <typename T>
double loss_mse(const Tensor<T>& x, const Tensor<T>& recon,
                Tensor<T>* grad_recon = nullptr) {
  if (!x.same_shape(recon))
    throw ValidationError("loss_mse: shape mismatch");
  const int64_t n = x.numel();
  if (n == 0) throw ValidationError("loss_mse: empty batch");
  double acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(x[i]) - recon[i];
    acc += r * r;
  }
  if (grad_recon) {
    *grad_recon = Tensor<T>(x.shape());
    const T scale = static_cast<T>(2.0 / n);
    for (int64_t i = 0; i < n; ++i)
      (*grad_recon)[i] = scale * (recon[i] - x[i]);
  }
  return acc / n;
}

// Uncertainty-weighted reconstruction objective: mean over batch and
// pixels of (x - x_hat)^2 / sigma^2 + log sigma^2, computed from
// log-variance directly (the log term is never exponentiated).
template <typename T>
double loss_aeu(const Tensor<T>& x, const Tensor<T>& recon,
                const Tensor<T>& log_var, Tensor<T>* grad_recon = nullptr,
                Tensor<T>* grad_log_var = nullptr) {
  if (!x.same_shape(recon) || !x.same_shape(log_var))
    throw ValidationError("loss_aeu: shape mismatch");
  const int64_t n = x.numel();
  if (n == 0) throw ValidationError("loss_aeu: empty batch");
  double acc = 0;
  if (grad_recon) *grad_recon = Tensor<T>(x.shape());
  if (grad_log_var) *grad_log_var = Tensor<T>(x.shape());
  for (int64_t i = 0; i < n; ++i) {
    const double lv = log_var[i];
    const double inv_var = std::exp(-lv);
    const double r = static_cast<double>(recon[i]) - x[i];
    acc += r * r * inv_var + lv;
    if (grad_recon)
      (*grad_recon)[i] = static_cast<T>(2.0 * r * inv_var / n);
    if (grad_log_var)
      (*grad_log_var)[i] = static_cast<T>((1.0 - r * r * inv_var) / n);
  }
  return acc / n;
}

}  // namespace ddad
