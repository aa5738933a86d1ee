#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "pipecam/nn/tensor.hpp"

namespace pipecam::nn {

/// Mean binary cross-entropy of sigmoid outputs against [0,1] targets.
/// The gradient is returned w.r.t. the pre-sigmoid logits in the fused,
/// numerically stable form (p - t) / count.
template <typename T>
double bce_pixelwise(const TensorT<T>& pred, const TensorT<T>& target,
                     TensorT<T>* grad_logits) {
  if (!pred.same_dims(target))
    throw std::invalid_argument("bce: shape mismatch");
  constexpr double kEps = 1e-7;
  const double inv_count = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  if (grad_logits && !grad_logits->same_dims(pred))
    *grad_logits = TensorT<T>(pred.n, pred.c, pred.h, pred.w);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p =
        std::min(1.0 - kEps, std::max(kEps, static_cast<double>(pred.v[i])));
    const double t = target.v[i];
    loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    if (grad_logits)
      grad_logits->v[i] =
          static_cast<T>((static_cast<double>(pred.v[i]) - t) * inv_count);
  }
  return loss * inv_count;
}

/// Stable log-sum-exp softmax cross-entropy over logits of shape
/// (batch, classes, 1, 1), averaged over the batch. Gradient is
/// (softmax - one_hot) / batch.
template <typename T>
double softmax_ce(const TensorT<T>& logits, std::span<const int> labels,
                  TensorT<T>* grad_logits) {
  const int batch = logits.n, classes = logits.c;
  if (static_cast<int>(labels.size()) != batch)
    throw std::invalid_argument("softmax_ce: label count mismatch");
  if (grad_logits && !grad_logits->same_dims(logits))
    *grad_logits = TensorT<T>(logits.n, logits.c, logits.h, logits.w);
  double loss = 0.0;
  const double inv_batch = 1.0 / batch;
  for (int s = 0; s < batch; ++s) {
    const int label = labels[s];
    if (label < 0 || label >= classes)
      throw std::invalid_argument("softmax_ce: label out of range");
    const T* z = logits.sample(s);
    double zmax = z[0];
    for (int k = 1; k < classes; ++k) zmax = std::max<double>(zmax, z[k]);
    double sum_exp = 0.0;
    for (int k = 0; k < classes; ++k) sum_exp += std::exp(z[k] - zmax);
    const double log_sum = zmax + std::log(sum_exp);
    loss += log_sum - z[label];
    if (grad_logits) {
      T* g = grad_logits->sample(s);
      for (int k = 0; k < classes; ++k) {
        const double p = std::exp(z[k] - log_sum);
        g[k] = static_cast<T>((p - (k == label ? 1.0 : 0.0)) * inv_batch);
      }
    }
  }
  return loss * inv_batch;
}

/// Predicted class = argmax over the class dimension, first index on ties.
template <typename T>
int argmax_class(const TensorT<T>& logits, int sample) {
  const T* z = logits.sample(sample);
  int best = 0;
  for (int k = 1; k < logits.c; ++k)
    if (z[k] > z[best]) best = k;
  return best;
}

}  // namespace pipecam::nn
