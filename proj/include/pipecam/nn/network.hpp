#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pipecam/errors.hpp"
#include "pipecam/nn/layers.hpp"
#include "pipecam/nn/tensor.hpp"
#include "pipecam/rng.hpp"

namespace pipecam::nn {

enum class LayerKind {
  kConv2d,
  kBatchNorm,
  kRelu,
  kMaxPool2,
  kUpsample2,
  kConcat,
  kSigmoid,
  kDense,
  kGlobalAvgPool,
};

enum class LossKind { kBcePixelwise, kSoftmaxCe };

struct LayerSpec {
  LayerKind kind;
  int in_channels = 0, out_channels = 0, kernel = 3;  // conv
  int dense_in = 0, dense_out = 0;                    // dense
  int bn_channels = 0;                                // batchnorm
  double bn_momentum = 0.9, bn_eps = 1e-5;
  int concat_source = -1;  // earlier layer whose output is appended

  static LayerSpec conv(int in_c, int out_c, int k) {
    LayerSpec s{LayerKind::kConv2d};
    s.in_channels = in_c;
    s.out_channels = out_c;
    s.kernel = k;
    return s;
  }
  static LayerSpec batchnorm(int channels) {
    LayerSpec s{LayerKind::kBatchNorm};
    s.bn_channels = channels;
    return s;
  }
  static LayerSpec relu() { return {LayerKind::kRelu}; }
  static LayerSpec maxpool2() { return {LayerKind::kMaxPool2}; }
  static LayerSpec upsample2() { return {LayerKind::kUpsample2}; }
  static LayerSpec concat(int source_layer) {
    LayerSpec s{LayerKind::kConcat};
    s.concat_source = source_layer;
    return s;
  }
  static LayerSpec sigmoid() { return {LayerKind::kSigmoid}; }
  static LayerSpec dense(int in, int out) {
    LayerSpec s{LayerKind::kDense};
    s.dense_in = in;
    s.dense_out = out;
    return s;
  }
  static LayerSpec global_avg_pool() { return {LayerKind::kGlobalAvgPool}; }
};

struct Shape {
  int c = 0, h = 0, w = 0;
  bool operator==(const Shape&) const = default;
};

struct NetworkSpec {
  int in_channels = 0, in_h = 0, in_w = 0;
  std::vector<LayerSpec> layers;
  LossKind loss = LossKind::kBcePixelwise;

  /// Static shape check; shapes[i] is the output of layer i. Throws
  /// std::invalid_argument naming the offending layer.
  std::vector<Shape> shapes() const;

  /// (source, target) pairs of the skip connections, in target order.
  std::vector<std::pair<int, int>> skip_table() const;

  /// Trainable parameter count (kernels, biases, batchnorm gain/shift).
  std::size_t parameter_count() const;
};

template <typename T>
using WeightStoreT = std::map<std::string, TensorT<T>>;
using WeightStore = WeightStoreT<float>;

/// Expected parameter names and dims for a spec; the NNW1 loader validates
/// files against this.
std::map<std::string, std::vector<int>> expected_parameters(
    const NetworkSpec& spec);

/// Per-layer parameter name, e.g. "L0.kernel", "L2.gamma".
std::string param_name(int layer_index, const char* field);

// "NNW1" weight file: magic; u32 tensor count; per tensor u16 name length,
// name, u8 rank, rank u32 dims (LE), then f32 values.
void save_weights(const WeightStore& weights, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path,
                         const NetworkSpec& spec);

namespace detail_init {
template <typename T>
void he_normal_fill(TensorT<T>& t, int fan_in, SplitMix64& rng) {
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (auto& v : t.v) v = static_cast<T>(rng.next_gaussian() * std_dev);
}
}  // namespace detail_init

/// He-normal conv/dense weights, zero biases, identity batchnorm.
template <typename T>
WeightStoreT<T> init_weights(const NetworkSpec& spec, std::uint64_t seed) {
  spec.shapes();  // validate before allocating
  WeightStoreT<T> ws;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const int li = static_cast<int>(i);
    switch (l.kind) {
      case LayerKind::kConv2d: {
        TensorT<T> kern(l.out_channels, l.in_channels, l.kernel, l.kernel, 4);
        detail_init::he_normal_fill(kern, l.in_channels * l.kernel * l.kernel,
                                    rng);
        ws.emplace(param_name(li, "kernel"), std::move(kern));
        ws.emplace(param_name(li, "bias"), TensorT<T>::vec(l.out_channels));
        break;
      }
      case LayerKind::kDense: {
        TensorT<T> wmat = TensorT<T>::mat(l.dense_out, l.dense_in);
        detail_init::he_normal_fill(wmat, l.dense_in, rng);
        ws.emplace(param_name(li, "weight"), std::move(wmat));
        ws.emplace(param_name(li, "bias"), TensorT<T>::vec(l.dense_out));
        break;
      }
      case LayerKind::kBatchNorm: {
        TensorT<T> gamma = TensorT<T>::vec(l.bn_channels);
        std::fill(gamma.v.begin(), gamma.v.end(), T(1));
        ws.emplace(param_name(li, "gamma"), std::move(gamma));
        ws.emplace(param_name(li, "beta"), TensorT<T>::vec(l.bn_channels));
        ws.emplace(param_name(li, "running_mean"),
                   TensorT<T>::vec(l.bn_channels));
        TensorT<T> rv = TensorT<T>::vec(l.bn_channels);
        std::fill(rv.v.begin(), rv.v.end(), T(1));
        ws.emplace(param_name(li, "running_var"), std::move(rv));
        break;
      }
      default:
        break;
    }
  }
  return ws;
}

/// Reusable activation, gradient and cache buffers for one batch size.
template <typename T>
struct PassContext {
  TensorT<T> input;
  std::vector<TensorT<T>> act;
  std::vector<TensorT<T>> grad;       // d loss / d act[i]
  TensorT<T> grad_input;              // d loss / d input
  std::vector<BatchNormCache<T>> bn_cache;
  std::vector<std::vector<std::uint8_t>> pool_argmax;
  std::vector<T> col_ws, col_grad_ws;
  bool train_cached = false;
};

template <typename T>
void check_finite(const TensorT<T>& t, int layer_index, const char* stage) {
  for (const T& v : t.v)
    if (!std::isfinite(static_cast<double>(v)))
      throw EngineFault(layer_index,
                        std::string("non-finite value in ") + stage +
                            " at layer " + std::to_string(layer_index));
}

/// Runs the network on ctx.input (set by the caller). Train mode caches
/// activations for an exact backward; infer mode uses running batchnorm
/// statistics (running stats are the only state train mode mutates).
template <typename T>
void forward_pass(const NetworkSpec& spec, WeightStoreT<T>& weights,
                  PassContext<T>& ctx, bool train) {
  const auto shapes = spec.shapes();
  const int batch = ctx.input.n;
  const std::size_t n_layers = spec.layers.size();
  ctx.act.resize(n_layers);
  ctx.bn_cache.resize(n_layers);
  ctx.pool_argmax.resize(n_layers);
  ctx.train_cached = train;

  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& l = spec.layers[i];
    const auto& os = shapes[i];
    TensorT<T>& out = ctx.act[i];
    if (out.n != batch || out.c != os.c || out.h != os.h || out.w != os.w)
      out = TensorT<T>(batch, os.c, os.h, os.w);
    const TensorT<T>& in = i == 0 ? ctx.input : ctx.act[i - 1];
    const int li = static_cast<int>(i);
    switch (l.kind) {
      case LayerKind::kConv2d:
        conv2d_forward(in, weights.at(param_name(li, "kernel")),
                       weights.at(param_name(li, "bias")), out, ctx.col_ws);
        break;
      case LayerKind::kBatchNorm:
        if (train)
          batchnorm_forward_train(in, weights.at(param_name(li, "gamma")),
                                  weights.at(param_name(li, "beta")),
                                  weights.at(param_name(li, "running_mean")),
                                  weights.at(param_name(li, "running_var")),
                                  l.bn_momentum, l.bn_eps, out,
                                  ctx.bn_cache[i]);
        else
          batchnorm_forward_infer(in, weights.at(param_name(li, "gamma")),
                                  weights.at(param_name(li, "beta")),
                                  weights.at(param_name(li, "running_mean")),
                                  weights.at(param_name(li, "running_var")),
                                  l.bn_eps, out);
        break;
      case LayerKind::kRelu:
        relu_forward(in, out);
        break;
      case LayerKind::kMaxPool2:
        maxpool2_forward(in, out, ctx.pool_argmax[i]);
        break;
      case LayerKind::kUpsample2:
        upsample2_forward(in, out);
        break;
      case LayerKind::kConcat:
        concat_forward(in, ctx.act[l.concat_source], out);
        break;
      case LayerKind::kSigmoid:
        sigmoid_forward(in, out);
        break;
      case LayerKind::kDense:
        dense_forward(in, weights.at(param_name(li, "weight")),
                      weights.at(param_name(li, "bias")), out);
        break;
      case LayerKind::kGlobalAvgPool:
        global_avg_pool_forward(in, out);
        break;
    }
    check_finite(out, li, "forward");
  }
}

/// Backpropagates seed_grad (gradient w.r.t. the output of layer
/// `from_layer`) down to the input, accumulating parameter gradients into
/// `grads` (the caller zeroes them). Requires a prior train-mode forward.
template <typename T>
void backward_pass(const NetworkSpec& spec, const WeightStoreT<T>& weights,
                   PassContext<T>& ctx, const TensorT<T>& seed_grad,
                   int from_layer, WeightStoreT<T>& grads) {
  if (!ctx.train_cached)
    throw std::logic_error("backward_pass requires a train-mode forward");
  const int batch = ctx.input.n;
  ctx.grad.resize(spec.layers.size());
  for (int i = 0; i <= from_layer; ++i) {
    if (!ctx.grad[i].same_dims(ctx.act[i]))
      ctx.grad[i] = TensorT<T>(batch, ctx.act[i].c, ctx.act[i].h, ctx.act[i].w);
    else
      ctx.grad[i].zero();
  }
  if (!ctx.grad_input.same_dims(ctx.input))
    ctx.grad_input = TensorT<T>(batch, ctx.input.c, ctx.input.h, ctx.input.w);
  else
    ctx.grad_input.zero();

  if (!seed_grad.same_dims(ctx.act[from_layer]))
    throw std::invalid_argument("backward_pass: seed gradient dims mismatch");
  ctx.grad[from_layer] = seed_grad;

  for (int i = from_layer; i >= 0; --i) {
    const auto& l = spec.layers[i];
    const TensorT<T>& in = i == 0 ? ctx.input : ctx.act[i - 1];
    TensorT<T>& din = i == 0 ? ctx.grad_input : ctx.grad[i - 1];
    const TensorT<T>& dout = ctx.grad[i];
    switch (l.kind) {
      case LayerKind::kConv2d:
        conv2d_backward(in, weights.at(param_name(i, "kernel")), dout, din,
                        grads.at(param_name(i, "kernel")),
                        grads.at(param_name(i, "bias")), ctx.col_ws,
                        ctx.col_grad_ws);
        break;
      case LayerKind::kBatchNorm:
        batchnorm_backward(dout, weights.at(param_name(i, "gamma")),
                           ctx.bn_cache[i], din,
                           grads.at(param_name(i, "gamma")),
                           grads.at(param_name(i, "beta")));
        break;
      case LayerKind::kRelu:
        relu_backward(in, dout, din);
        break;
      case LayerKind::kMaxPool2:
        maxpool2_backward(dout, ctx.pool_argmax[i], in.h, in.w, din);
        break;
      case LayerKind::kUpsample2:
        upsample2_backward(dout, din);
        break;
      case LayerKind::kConcat:
        concat_backward(dout, din, ctx.grad[l.concat_source]);
        break;
      case LayerKind::kSigmoid:
        sigmoid_backward(ctx.act[i], dout, din);
        break;
      case LayerKind::kDense:
        dense_backward(in, weights.at(param_name(i, "weight")), dout, din,
                       grads.at(param_name(i, "weight")),
                       grads.at(param_name(i, "bias")));
        break;
      case LayerKind::kGlobalAvgPool:
        global_avg_pool_backward(dout, din);
        break;
    }
    check_finite(din, i, "backward");
  }
}

/// Zero-filled gradient store shaped like the trainable parameters.
template <typename T>
WeightStoreT<T> make_gradient_store(const NetworkSpec& spec) {
  WeightStoreT<T> grads = init_weights<T>(spec, 0);
  for (auto& [name, tensor] : grads) tensor.zero();
  // Running statistics are not trainable.
  for (auto it = grads.begin(); it != grads.end();) {
    if (it->first.find("running_") != std::string::npos)
      it = grads.erase(it);
    else
      ++it;
  }
  return grads;
}

}  // namespace pipecam::nn
