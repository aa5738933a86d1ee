#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace pipecam::nn {

/// Dense (batch, channels, height, width) tensor, row-major. The scalar type
/// is a template parameter: training runs in float, gradient checks
/// instantiate the whole engine in double.
template <typename T>
struct TensorT {
  int n = 0, c = 0, h = 0, w = 0;
  int rank = 4;  // logical rank for serialization (1, 2 or 4)
  std::vector<T> v;

  TensorT() = default;
  TensorT(int n_, int c_, int h_, int w_, int rank_ = 4)
      : n(n_), c(c_), h(h_), w(w_), rank(rank_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

  static TensorT vec(int len) { return TensorT(len, 1, 1, 1, 1); }
  static TensorT mat(int rows, int cols) { return TensorT(rows, cols, 1, 1, 2); }

  std::size_t size() const { return v.size(); }

  T* sample(int i) {
    return v.data() + static_cast<std::size_t>(i) * c * h * w;
  }
  const T* sample(int i) const {
    return v.data() + static_cast<std::size_t>(i) * c * h * w;
  }

  T& at(int ni, int ci, int yi, int xi) {
    return v[((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi];
  }
  T at(int ni, int ci, int yi, int xi) const {
    return v[((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi];
  }

  bool same_dims(const TensorT& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

using Tensor = TensorT<float>;

}  // namespace pipecam::nn
