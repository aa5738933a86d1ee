#pragma once

#include <span>
#include <vector>

#include "pipecam/image.hpp"

namespace pipecam {

/// Mean absolute error over all pixels and channels of two [0,1] images.
double mae(const Image& a, const Image& b);

/// Windowed structural similarity. Wang et al. convention: 11x11 Gaussian
/// window (sigma 1.5) normalized to sum 1, k1=0.01, k2=0.03, L=1, averaged
/// over fully interior window positions. Color images score the unweighted
/// mean of per-channel SSIM.
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

double ssim(const Image& a, const Image& b, const SsimParams& params = {});

double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// K x K counts, row = true class, column = predicted class.
std::vector<long> confusion(std::span<const int> predictions,
                            std::span<const int> labels, int k);

}  // namespace pipecam
