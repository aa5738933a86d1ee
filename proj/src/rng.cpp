#include "pipecam/rng.hpp"

#include <cmath>
#include <numbers>

namespace pipecam {

std::pair<double, double> SplitMix64::next_gaussian_pair() {
  const double u1 = 1.0 - next_unit();  // (0, 1]
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace pipecam
