#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

namespace pipecam {

// All randomness in the project flows through splitmix64 streams so that
// every artifact is reproducible bit-for-bit across runs and machines.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += kGoldenGamma;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// One-shot mix: the first output of a splitmix64 stream seeded with x.
inline std::uint64_t splitmix64_hash(std::uint64_t x) {
  return splitmix64_next(x);
}

/// Seed for the k-th member of a keyed stream family.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t k) {
  return seed ^ (kGoldenGamma * (k + 1));
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Seed for a named sub-stream (dataset, init, shuffle, noise, ...).
inline std::uint64_t derive_named(std::uint64_t seed, std::string_view name) {
  return splitmix64_hash(seed ^ fnv1a64(name));
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform double in [0, 1), 53 bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Uniform integer in [0, n), n > 0. Multiply-shift; bias < 2^-32 for
  /// the dataset-scale n used here.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Box-Muller pair of independent standard normals. u1 is kept in (0, 1]
  /// so the log never sees zero.
  std::pair<double, double> next_gaussian_pair();

  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    auto [z0, z1] = next_gaussian_pair();
    spare_ = z1;
    has_spare_ = true;
    return z0;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pipecam
