#include "pipecam/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pipecam {

double mae(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mae: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    sum += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
  return sum / static_cast<double>(a.data.size());
}

namespace {

std::vector<double> gaussian_window_1d(int n, double sigma) {
  std::vector<double> w(n);
  const double c = (n - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Weighted horizontal then vertical pass; output covers only positions where
// the window is fully interior.
void filter_valid(const float* img, int h, int w,
                  const std::vector<double>& win, std::vector<double>& tmp,
                  std::vector<double>& out,
                  bool square) {
  const int n = static_cast<int>(win.size());
  const int vw = w - n + 1, vh = h - n + 1;
  tmp.assign(static_cast<std::size_t>(h) * vw, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) {
        const double v = img[y * w + x + t];
        s += win[t] * (square ? (v * v) : v);
      }
      tmp[static_cast<std::size_t>(y) * vw + x] = s;
    }
  out.assign(static_cast<std::size_t>(vh) * vw, 0.0);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t)
        s += win[t] * tmp[static_cast<std::size_t>(y + t) * vw + x];
      out[static_cast<std::size_t>(y) * vw + x] = s;
    }
}

void filter_valid_product(const float* a, const float* b, int h, int w,
                          const std::vector<double>& win,
                          std::vector<double>& tmp, std::vector<double>& out) {
  const int n = static_cast<int>(win.size());
  const int vw = w - n + 1, vh = h - n + 1;
  tmp.assign(static_cast<std::size_t>(h) * vw, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      // Product formed before the window weight so that ssim(a, a) computes
      // covariance and variance through bitwise-identical arithmetic.
      for (int t = 0; t < n; ++t)
        s += win[t] * (static_cast<double>(a[y * w + x + t]) *
                       static_cast<double>(b[y * w + x + t]));
      tmp[static_cast<std::size_t>(y) * vw + x] = s;
    }
  out.assign(static_cast<std::size_t>(vh) * vw, 0.0);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t)
        s += win[t] * tmp[static_cast<std::size_t>(y + t) * vw + x];
      out[static_cast<std::size_t>(y) * vw + x] = s;
    }
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& p) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  if (a.height < p.window || a.width < p.window)
    throw std::invalid_argument("ssim: image smaller than window (" +
                                std::to_string(p.window) + ")");
  const auto win = gaussian_window_1d(p.window, p.sigma);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  std::vector<double> tmp, mu_a, mu_b, m2_a, m2_b, m_ab;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const float* pa = a.channel(c);
    const float* pb = b.channel(c);
    filter_valid(pa, a.height, a.width, win, tmp, mu_a, false);
    filter_valid(pb, a.height, a.width, win, tmp, mu_b, false);
    filter_valid(pa, a.height, a.width, win, tmp, m2_a, true);
    filter_valid(pb, a.height, a.width, win, tmp, m2_b, true);
    filter_valid_product(pa, pb, a.height, a.width, win, tmp, m_ab);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = m2_a[i] - ma * ma;
      const double vb = m2_b[i] - mb * mb;
      const double cov = m_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / a.channels;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw std::invalid_argument("accuracy: empty or mismatched inputs");
  long correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::vector<long> confusion(std::span<const int> predictions,
                            std::span<const int> labels, int k) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw std::invalid_argument("confusion: empty or mismatched inputs");
  std::vector<long> counts(static_cast<std::size_t>(k) * k, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k || predictions[i] < 0 ||
        predictions[i] >= k)
      throw std::invalid_argument("confusion: class index out of range");
    counts[static_cast<std::size_t>(labels[i]) * k + predictions[i]]++;
  }
  return counts;
}

}  // namespace pipecam
