#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "pipecam/nn/gemm.hpp"
#include "pipecam/nn/tensor.hpp"

namespace pipecam::nn {

// Forward/backward primitives. Every backward is the exact adjoint of its
// forward; finite-difference tests in double mode hold them to that.

// ---------------------------------------------------------------- conv2d --

/// im2col for stride-1 convolution with zero padding that preserves spatial
/// dims. Output rows are (ic, ky, kx) triples, columns are (y, x) positions.
template <typename T>
void im2col(const T* in, int channels, int h, int w, int kernel, T* col) {
  const int pad = (kernel - 1) / 2;
  const int hw = h * w;
  std::size_t row = 0;
  for (int ic = 0; ic < channels; ++ic) {
    const T* src_ch = in + static_cast<std::size_t>(ic) * hw;
    for (int ky = 0; ky < kernel; ++ky) {
      const int dy = ky - pad;
      for (int kx = 0; kx < kernel; ++kx) {
        const int dx = kx - pad;
        T* dst = col + row * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          T* drow = dst + static_cast<std::size_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::memset(drow, 0, sizeof(T) * w);
            continue;
          }
          const T* srow = src_ch + static_cast<std::size_t>(sy) * w;
          const int x0 = dx < 0 ? -dx : 0;
          const int x1 = dx > 0 ? w - dx : w;
          if (x0 > 0) std::memset(drow, 0, sizeof(T) * x0);
          if (x1 < w) std::memset(drow + x1, 0, sizeof(T) * (w - x1));
          if (x1 > x0)
            std::memcpy(drow + x0, srow + x0 + dx, sizeof(T) * (x1 - x0));
        }
        ++row;
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds column-matrix gradients back to image
/// layout.
template <typename T>
void col2im_add(const T* col, int channels, int h, int w, int kernel, T* out) {
  const int pad = (kernel - 1) / 2;
  const int hw = h * w;
  std::size_t row = 0;
  for (int ic = 0; ic < channels; ++ic) {
    T* dst_ch = out + static_cast<std::size_t>(ic) * hw;
    for (int ky = 0; ky < kernel; ++ky) {
      const int dy = ky - pad;
      for (int kx = 0; kx < kernel; ++kx) {
        const int dx = kx - pad;
        const T* src = col + row * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const T* srow = src + static_cast<std::size_t>(y) * w;
          T* drow = dst_ch + static_cast<std::size_t>(sy) * w;
          const int x0 = dx < 0 ? -dx : 0;
          const int x1 = dx > 0 ? w - dx : w;
          for (int x = x0; x < x1; ++x) drow[x + dx] += srow[x];
        }
        ++row;
      }
    }
  }
}

/// kernels: (out_c, in_c, k, k); bias: out_c. Stride 1, zero padding keeps
/// spatial dims; kernel must be odd (1x1 and 3x3 are the supported sizes).
template <typename T>
void conv2d_forward(const TensorT<T>& in, const TensorT<T>& kernels,
                    const TensorT<T>& bias, TensorT<T>& out,
                    std::vector<T>& col_ws) {
  const int k = kernels.h;
  if (k % 2 == 0) throw std::invalid_argument("conv2d: kernel must be odd");
  if (kernels.c != in.c || kernels.w != k)
    throw std::invalid_argument("conv2d: kernel shape mismatch");
  const int hw = in.h * in.w;
  const int krows = in.c * k * k;
  if (k > 1) col_ws.resize(static_cast<std::size_t>(krows) * hw);
  for (int s = 0; s < in.n; ++s) {
    const T* x = in.sample(s);
    T* y = out.sample(s);
    if (k == 1) {
      gemm_nn<T>(kernels.v.data(), x, y, kernels.n, hw, in.c, false);
    } else {
      im2col(x, in.c, in.h, in.w, k, col_ws.data());
      gemm_nn<T>(kernels.v.data(), col_ws.data(), y, kernels.n, hw, krows,
                 false);
    }
    for (int oc = 0; oc < kernels.n; ++oc) {
      const T b = bias.v[oc];
      T* row = y + static_cast<std::size_t>(oc) * hw;
      for (int i = 0; i < hw; ++i) row[i] += b;
    }
  }
}

template <typename T>
void conv2d_backward(const TensorT<T>& in, const TensorT<T>& kernels,
                     const TensorT<T>& grad_out, TensorT<T>& grad_in,
                     TensorT<T>& grad_kernels, TensorT<T>& grad_bias,
                     std::vector<T>& col_ws, std::vector<T>& col_grad_ws) {
  const int k = kernels.h;
  const int hw = in.h * in.w;
  const int krows = in.c * k * k;
  const int out_c = kernels.n;

  for (int oc = 0; oc < out_c; ++oc) {
    T acc = T(0);
    for (int s = 0; s < in.n; ++s) {
      const T* row = grad_out.sample(s) + static_cast<std::size_t>(oc) * hw;
      for (int i = 0; i < hw; ++i) acc += row[i];
    }
    grad_bias.v[oc] += acc;
  }

  // W^T materialized once: (krows x out_c).
  std::vector<T> wt(static_cast<std::size_t>(krows) * out_c);
  for (int oc = 0; oc < out_c; ++oc)
    for (int r = 0; r < krows; ++r)
      wt[static_cast<std::size_t>(r) * out_c + oc] =
          kernels.v[static_cast<std::size_t>(oc) * krows + r];

  if (k > 1) col_ws.resize(static_cast<std::size_t>(krows) * hw);
  col_grad_ws.resize(static_cast<std::size_t>(krows) * hw);

  for (int s = 0; s < in.n; ++s) {
    const T* x = in.sample(s);
    const T* dy = grad_out.sample(s);
    T* dx = grad_in.sample(s);
    if (k == 1) {
      gemm_nt<T>(dy, x, grad_kernels.v.data(), out_c, in.c, hw, true);
      gemm_nn<T>(wt.data(), dy, col_grad_ws.data(), in.c, hw, out_c, false);
      for (int i = 0; i < in.c * hw; ++i) dx[i] += col_grad_ws[i];
    } else {
      im2col(x, in.c, in.h, in.w, k, col_ws.data());
      gemm_nt<T>(dy, col_ws.data(), grad_kernels.v.data(), out_c, krows, hw,
                 true);
      gemm_nn<T>(wt.data(), dy, col_grad_ws.data(), krows, hw, out_c, false);
      col2im_add(col_grad_ws.data(), in.c, in.h, in.w, k, dx);
    }
  }
}

// ------------------------------------------------------------- batchnorm --

template <typename T>
struct BatchNormCache {
  std::vector<T> xhat;     // normalized pre-scale activations
  std::vector<T> inv_std;  // per channel
};

template <typename T>
void batchnorm_forward_train(const TensorT<T>& in, const TensorT<T>& gamma,
                             const TensorT<T>& beta, TensorT<T>& running_mean,
                             TensorT<T>& running_var, double momentum,
                             double eps, TensorT<T>& out,
                             BatchNormCache<T>& cache) {
  if (in.n < 2)
    throw std::invalid_argument("batchnorm: train mode needs batch size >= 2");
  const int hw = in.h * in.w;
  const std::size_t per_channel = static_cast<std::size_t>(in.n) * hw;
  cache.xhat.resize(in.size());
  cache.inv_std.resize(in.c);
  for (int c = 0; c < in.c; ++c) {
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < in.n; ++s) {
      const T* x = in.sample(s) + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) {
        sum += x[i];
        sum2 += static_cast<double>(x[i]) * x[i];
      }
    }
    const double mean = sum / static_cast<double>(per_channel);
    const double var =
        std::max(0.0, sum2 / static_cast<double>(per_channel) - mean * mean);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    cache.inv_std[c] = static_cast<T>(inv_std);
    running_mean.v[c] = static_cast<T>(momentum * running_mean.v[c] +
                                       (1.0 - momentum) * mean);
    running_var.v[c] =
        static_cast<T>(momentum * running_var.v[c] + (1.0 - momentum) * var);
    const T g = gamma.v[c], b = beta.v[c];
    for (int s = 0; s < in.n; ++s) {
      const T* x = in.sample(s) + static_cast<std::size_t>(c) * hw;
      T* y = out.sample(s) + static_cast<std::size_t>(c) * hw;
      T* xh = cache.xhat.data() +
              (static_cast<std::size_t>(s) * in.c + c) * hw;
      for (int i = 0; i < hw; ++i) {
        const T v = static_cast<T>((x[i] - mean) * inv_std);
        xh[i] = v;
        y[i] = g * v + b;
      }
    }
  }
}

template <typename T>
void batchnorm_forward_infer(const TensorT<T>& in, const TensorT<T>& gamma,
                             const TensorT<T>& beta,
                             const TensorT<T>& running_mean,
                             const TensorT<T>& running_var, double eps,
                             TensorT<T>& out) {
  const int hw = in.h * in.w;
  for (int c = 0; c < in.c; ++c) {
    const T inv_std =
        static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.v[c]) + eps));
    const T mean = running_mean.v[c];
    const T g = gamma.v[c], b = beta.v[c];
    for (int s = 0; s < in.n; ++s) {
      const T* x = in.sample(s) + static_cast<std::size_t>(c) * hw;
      T* y = out.sample(s) + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) y[i] = g * (x[i] - mean) * inv_std + b;
    }
  }
}

/// Full batch-statistics gradient (mean and variance both treated as
/// functions of the input batch).
template <typename T>
void batchnorm_backward(const TensorT<T>& grad_out, const TensorT<T>& gamma,
                        const BatchNormCache<T>& cache, TensorT<T>& grad_in,
                        TensorT<T>& grad_gamma, TensorT<T>& grad_beta) {
  const int n = grad_out.n, ch = grad_out.c, hw = grad_out.h * grad_out.w;
  const double count = static_cast<double>(n) * hw;
  for (int c = 0; c < ch; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int s = 0; s < n; ++s) {
      const T* dy = grad_out.sample(s) + static_cast<std::size_t>(c) * hw;
      const T* xh =
          cache.xhat.data() + (static_cast<std::size_t>(s) * ch + c) * hw;
      for (int i = 0; i < hw; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
      }
    }
    grad_gamma.v[c] += static_cast<T>(sum_dy_xhat);
    grad_beta.v[c] += static_cast<T>(sum_dy);
    const double g_inv = static_cast<double>(gamma.v[c]) * cache.inv_std[c];
    const double mean_dy = sum_dy / count;
    const double mean_dy_xhat = sum_dy_xhat / count;
    for (int s = 0; s < n; ++s) {
      const T* dy = grad_out.sample(s) + static_cast<std::size_t>(c) * hw;
      const T* xh =
          cache.xhat.data() + (static_cast<std::size_t>(s) * ch + c) * hw;
      T* dx = grad_in.sample(s) + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i)
        dx[i] += static_cast<T>(g_inv *
                                (dy[i] - mean_dy - xh[i] * mean_dy_xhat));
    }
  }
}

// ------------------------------------------------- relu/sigmoid/pooling --

template <typename T>
void relu_forward(const TensorT<T>& in, TensorT<T>& out) {
  for (std::size_t i = 0; i < in.size(); ++i)
    out.v[i] = in.v[i] > T(0) ? in.v[i] : T(0);
}

/// Subgradient at exactly 0 is fixed to 0.
template <typename T>
void relu_backward(const TensorT<T>& in, const TensorT<T>& grad_out,
                   TensorT<T>& grad_in) {
  for (std::size_t i = 0; i < in.size(); ++i)
    if (in.v[i] > T(0)) grad_in.v[i] += grad_out.v[i];
}

template <typename T>
void sigmoid_forward(const TensorT<T>& in, TensorT<T>& out) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = in.v[i];
    out.v[i] = static_cast<T>(
        x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                 : std::exp(x) / (1.0 + std::exp(x)));
  }
}

template <typename T>
void sigmoid_backward(const TensorT<T>& out, const TensorT<T>& grad_out,
                      TensorT<T>& grad_in) {
  for (std::size_t i = 0; i < out.size(); ++i)
    grad_in.v[i] += grad_out.v[i] * out.v[i] * (T(1) - out.v[i]);
}

/// 2x2 stride-2 max pooling; spatial dims must be even. Ties go to the first
/// element in row-major window order.
template <typename T>
void maxpool2_forward(const TensorT<T>& in, TensorT<T>& out,
                      std::vector<std::uint8_t>& argmax) {
  if (in.h % 2 != 0 || in.w % 2 != 0)
    throw std::invalid_argument("maxpool2: spatial dims must be even");
  const int oh = in.h / 2, ow = in.w / 2;
  argmax.resize(static_cast<std::size_t>(in.n) * in.c * oh * ow);
  std::size_t idx = 0;
  for (int s = 0; s < in.n; ++s)
    for (int c = 0; c < in.c; ++c) {
      const T* x = in.sample(s) + static_cast<std::size_t>(c) * in.h * in.w;
      T* y = out.sample(s) + static_cast<std::size_t>(c) * oh * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const int base = 2 * oy * in.w + 2 * ox;
          T best = x[base];
          std::uint8_t best_i = 0;
          const T cands[3] = {x[base + 1], x[base + in.w],
                              x[base + in.w + 1]};
          for (std::uint8_t t = 0; t < 3; ++t)
            if (cands[t] > best) {
              best = cands[t];
              best_i = static_cast<std::uint8_t>(t + 1);
            }
          y[oy * ow + ox] = best;
          argmax[idx++] = best_i;
        }
    }
}

template <typename T>
void maxpool2_backward(const TensorT<T>& grad_out,
                       const std::vector<std::uint8_t>& argmax, int in_h,
                       int in_w, TensorT<T>& grad_in) {
  const int oh = grad_out.h, ow = grad_out.w;
  std::size_t idx = 0;
  for (int s = 0; s < grad_out.n; ++s)
    for (int c = 0; c < grad_out.c; ++c) {
      const T* dy = grad_out.sample(s) + static_cast<std::size_t>(c) * oh * ow;
      T* dx = grad_in.sample(s) + static_cast<std::size_t>(c) * in_h * in_w;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const std::uint8_t a = argmax[idx++];
          const int y = 2 * oy + (a >> 1);
          const int x = 2 * ox + (a & 1);
          dx[y * in_w + x] += dy[oy * ow + ox];
        }
    }
}

/// Nearest-neighbor 2x doubling.
template <typename T>
void upsample2_forward(const TensorT<T>& in, TensorT<T>& out) {
  const int oh = in.h * 2, ow = in.w * 2;
  for (int s = 0; s < in.n; ++s)
    for (int c = 0; c < in.c; ++c) {
      const T* x = in.sample(s) + static_cast<std::size_t>(c) * in.h * in.w;
      T* y = out.sample(s) + static_cast<std::size_t>(c) * oh * ow;
      for (int yy = 0; yy < oh; ++yy) {
        const T* srow = x + (yy / 2) * in.w;
        T* drow = y + static_cast<std::size_t>(yy) * ow;
        for (int xx = 0; xx < ow; ++xx) drow[xx] = srow[xx / 2];
      }
    }
}

template <typename T>
void upsample2_backward(const TensorT<T>& grad_out, TensorT<T>& grad_in) {
  const int ih = grad_in.h, iw = grad_in.w;
  for (int s = 0; s < grad_out.n; ++s)
    for (int c = 0; c < grad_out.c; ++c) {
      const T* dy = grad_out.sample(s) +
                    static_cast<std::size_t>(c) * grad_out.h * grad_out.w;
      T* dx = grad_in.sample(s) + static_cast<std::size_t>(c) * ih * iw;
      for (int y = 0; y < grad_out.h; ++y)
        for (int x = 0; x < grad_out.w; ++x)
          dx[(y / 2) * iw + x / 2] += dy[y * grad_out.w + x];
    }
}

// ------------------------------------------------------- concat/gap/dense --

template <typename T>
void concat_forward(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& out) {
  const std::size_t a_ch = static_cast<std::size_t>(a.c) * a.h * a.w;
  const std::size_t b_ch = static_cast<std::size_t>(b.c) * b.h * b.w;
  for (int s = 0; s < a.n; ++s) {
    std::memcpy(out.sample(s), a.sample(s), sizeof(T) * a_ch);
    std::memcpy(out.sample(s) + a_ch, b.sample(s), sizeof(T) * b_ch);
  }
}

template <typename T>
void concat_backward(const TensorT<T>& grad_out, TensorT<T>& grad_a,
                     TensorT<T>& grad_b) {
  const std::size_t a_ch = static_cast<std::size_t>(grad_a.c) * grad_a.h * grad_a.w;
  const std::size_t b_ch = static_cast<std::size_t>(grad_b.c) * grad_b.h * grad_b.w;
  for (int s = 0; s < grad_out.n; ++s) {
    const T* src = grad_out.sample(s);
    T* da = grad_a.sample(s);
    T* db = grad_b.sample(s);
    for (std::size_t i = 0; i < a_ch; ++i) da[i] += src[i];
    for (std::size_t i = 0; i < b_ch; ++i) db[i] += src[a_ch + i];
  }
}

template <typename T>
void global_avg_pool_forward(const TensorT<T>& in, TensorT<T>& out) {
  const int hw = in.h * in.w;
  for (int s = 0; s < in.n; ++s)
    for (int c = 0; c < in.c; ++c) {
      const T* x = in.sample(s) + static_cast<std::size_t>(c) * hw;
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += x[i];
      out.sample(s)[c] = static_cast<T>(acc / hw);
    }
}

template <typename T>
void global_avg_pool_backward(const TensorT<T>& grad_out, TensorT<T>& grad_in) {
  const int hw = grad_in.h * grad_in.w;
  const T inv = T(1) / static_cast<T>(hw);
  for (int s = 0; s < grad_out.n; ++s)
    for (int c = 0; c < grad_in.c; ++c) {
      const T g = grad_out.sample(s)[c] * inv;
      T* dx = grad_in.sample(s) + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) dx[i] += g;
    }
}

/// weight: (out, in); input flattened per sample.
template <typename T>
void dense_forward(const TensorT<T>& in, const TensorT<T>& weight,
                   const TensorT<T>& bias, TensorT<T>& out) {
  const int in_len = in.c * in.h * in.w;
  const int out_len = weight.n;
  for (int s = 0; s < in.n; ++s) {
    const T* x = in.sample(s);
    T* y = out.sample(s);
    for (int o = 0; o < out_len; ++o) {
      const T* wrow = weight.v.data() + static_cast<std::size_t>(o) * in_len;
      T acc = bias.v[o];
      for (int i = 0; i < in_len; ++i) acc += wrow[i] * x[i];
      y[o] = acc;
    }
  }
}

template <typename T>
void dense_backward(const TensorT<T>& in, const TensorT<T>& weight,
                    const TensorT<T>& grad_out, TensorT<T>& grad_in,
                    TensorT<T>& grad_weight, TensorT<T>& grad_bias) {
  const int in_len = in.c * in.h * in.w;
  const int out_len = weight.n;
  for (int s = 0; s < in.n; ++s) {
    const T* x = in.sample(s);
    const T* dy = grad_out.sample(s);
    T* dx = grad_in.sample(s);
    for (int o = 0; o < out_len; ++o) {
      const T g = dy[o];
      grad_bias.v[o] += g;
      const T* wrow = weight.v.data() + static_cast<std::size_t>(o) * in_len;
      T* gw = grad_weight.v.data() + static_cast<std::size_t>(o) * in_len;
      for (int i = 0; i < in_len; ++i) {
        gw[i] += g * x[i];
        dx[i] += g * wrow[i];
      }
    }
  }
}

}  // namespace pipecam::nn
