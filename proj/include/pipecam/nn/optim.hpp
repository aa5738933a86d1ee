#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipecam/nn/network.hpp"

namespace pipecam::nn {

/// Adam with standard bias correction. Moments are kept in double so the
/// update arithmetic is identical in float and double engine modes.
template <typename T>
struct AdamStateT {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;
  std::map<std::string, std::vector<double>> m, v;
};

using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(WeightStoreT<T>& params, const WeightStoreT<T>& grads,
               AdamStateT<T>& state) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.t);
  const double bc2 = 1.0 - std::pow(state.beta2, state.t);
  for (const auto& [name, grad] : grads) {
    auto pit = params.find(name);
    if (pit == params.end())
      throw std::invalid_argument("adam_step: unknown parameter " + name);
    TensorT<T>& param = pit->second;
    if (param.size() != grad.size())
      throw std::invalid_argument("adam_step: shape mismatch for " + name);
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != param.size()) m.assign(param.size(), 0.0);
    if (v.size() != param.size()) v.assign(param.size(), 0.0);
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad.v[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      param.v[i] = static_cast<T>(
          param.v[i] - state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
  }
}

}  // namespace pipecam::nn
