#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pipecam/metrics.hpp"
#include "pipecam/rng.hpp"

using namespace pipecam;

namespace {

Image random_image(int c, int h, int w, std::uint64_t seed) {
  Image img(c, h, w);
  SplitMix64 rng(seed);
  for (auto& v : img.data) v = static_cast<float>(rng.next_unit());
  return img;
}

// Independent direct-formula SSIM: per valid window position, accumulate
// weighted statistics with plain nested loops. Deliberately structured
// differently from the separable production implementation.
double ssim_direct_oracle(const Image& a, const Image& b) {
  const int n = 11;
  const double sigma = 1.5;
  std::vector<double> win(static_cast<std::size_t>(n) * n);
  double wsum = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double dy = y - 5.0, dx = x - 5.0;
      win[y * n + x] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
      wsum += win[y * n + x];
    }
  for (double& w : win) w /= wsum;
  const double c1 = 1e-4, c2 = 9e-4;

  double total = 0.0;
  for (int ch = 0; ch < a.channels; ++ch) {
    double acc = 0.0;
    int count = 0;
    for (int oy = 0; oy + n <= a.height; ++oy)
      for (int ox = 0; ox + n <= a.width; ++ox) {
        double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x) {
            const double w = win[y * n + x];
            const double va = a.at(ch, oy + y, ox + x);
            const double vb = b.at(ch, oy + y, ox + x);
            ma += w * va;
            mb += w * vb;
            maa += w * va * va;
            mbb += w * vb * vb;
            mab += w * va * vb;
          }
        const double sa = maa - ma * ma;
        const double sb = mbb - mb * mb;
        const double sab = mab - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * sab + c2)) /
               ((ma * ma + mb * mb + c1) * (sa + sb + c2));
        ++count;
      }
    total += acc / count;
  }
  return total / a.channels;
}

}  // namespace

TEST_CASE("mae hand cases") {
  Image a(1, 1, 2), b(1, 1, 2);
  a.data = {0.0f, 0.5f};
  b.data = {0.5f, 1.0f};
  CHECK(mae(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mae(a, a) == 0.0);

  Image zeros(1, 3, 3), ones(1, 3, 3);
  std::fill(ones.data.begin(), ones.data.end(), 1.0f);
  CHECK(mae(zeros, ones) == 1.0);

  Image wrong(1, 2, 2);
  CHECK_THROWS_AS(mae(a, wrong), std::invalid_argument);
}

TEST_CASE("mae behaves as a metric on random triples") {
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(1, 6, 6, 10 + t);
    const Image b = random_image(1, 6, 6, 20 + t);
    const Image c = random_image(1, 6, 6, 30 + t);
    CHECK(mae(a, b) >= 0.0);
    CHECK(mae(a, b) == mae(b, a));
    CHECK(mae(a, c) <= mae(a, b) + mae(b, c) + 1e-15);
  }
}

TEST_CASE("ssim of an image with itself is exactly 1") {
  const Image a = random_image(1, 16, 16, 5);
  CHECK(ssim(a, a) == 1.0);
  const Image color = random_image(3, 12, 13, 6);
  CHECK(ssim(color, color) == 1.0);
}

TEST_CASE("constant images match the closed form") {
  Image zeros(1, 16, 16), ones(1, 16, 16);
  std::fill(ones.data.begin(), ones.data.end(), 1.0f);
  const double expected = 1e-4 / (1.0 + 1e-4);
  CHECK(ssim(zeros, ones) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ssim is symmetric to 1e-12") {
  for (int t = 0; t < 5; ++t) {
    const Image a = random_image(1, 14, 14, 40 + t);
    const Image b = random_image(1, 14, 14, 50 + t);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
  }
}

TEST_CASE("ssim matches the independent direct-formula oracle") {
  for (int t = 0; t < 20; ++t) {
    const Image a = random_image(1, 16, 16, 100 + t);
    const Image b = random_image(1, 16, 16, 200 + t);
    CHECK(std::abs(ssim(a, b) - ssim_direct_oracle(a, b)) < 1e-9);
  }
}

TEST_CASE("ssim of independent noise pairs is low") {
  double total = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Image a = random_image(1, 16, 16, 300 + t);
    const Image b = random_image(1, 16, 16, 400 + t);
    total += ssim(a, b);
  }
  CHECK(total / 50.0 < 0.2);
}

TEST_CASE("ssim rejects images smaller than the window") {
  const Image a = random_image(1, 8, 16, 1);
  CHECK_THROWS_AS(ssim(a, a), std::invalid_argument);
}

TEST_CASE("accuracy and confusion") {
  const std::vector<int> labels = {0, 1, 2, 1};
  const std::vector<int> perfect = labels;
  CHECK(accuracy(perfect, labels) == 1.0);
  const auto conf = confusion(perfect, labels, 3);
  long diag = conf[0] + conf[4] + conf[8];
  CHECK(diag == 4);

  std::vector<int> shifted(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    shifted[i] = (labels[i] + 1) % 3;
  CHECK(accuracy(shifted, labels) == 0.0);

  const std::vector<int> mostly = {0, 1, 2, 0};
  CHECK(accuracy(mostly, labels) == doctest::Approx(0.75));

  long sum = 0;
  for (long v : confusion(mostly, labels, 3)) sum += v;
  CHECK(sum == 4);

  CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
}
