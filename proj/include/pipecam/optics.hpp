#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pipecam/image.hpp"

namespace pipecam {

/// Geometry and randomness of the simulated lightpipe camera.
///
/// The desk-scale defaults (32x32 scene, 40x40 sensor) keep the 1.25
/// sensor-to-network downsampling ratio of the full-scale instrument while
/// staying cheap enough to invert densely.
struct OpticalConfig {
  int scene_h = 32;
  int scene_w = 32;
  int channels = 1;  // 1 or 3
  int sensor_h = 40;
  int sensor_w = 40;
  std::vector<double> depths_cm = {29.0, 32.0, 35.0, 38.0, 41.0};
  double ref_depth_cm = 35.0;
  double blur_sigma0 = 1.0;       // px at the reference depth
  int blobs_per_column = 3;
  double blob_width_min = 1.5;    // px
  double blob_width_max = 3.0;
  std::uint64_t seed = 42;
  bool identity_mode = false;

  void validate() const;            // throws std::invalid_argument
  int ref_depth_index() const;      // index of ref_depth_cm in depths_cm
  std::uint64_t digest() const;     // content hash over all fields
};

struct NoiseParams {
  double read_sigma = 0.002;   // additive, intensity units
  double shot_sigma = 0.01;    // intensity units per sqrt(intensity)
  bool enabled = true;

  void validate() const;
};

/// Dense nonnegative map from flattened scene to flattened analog sensor at
/// one object depth. Entries are >= 0, column sums <= 1 and row sums <= 1,
/// so intensity transport is passive per pixel as well as in total.
struct TransferOperator {
  int rows = 0;  // sensor_h * sensor_w
  int cols = 0;  // scene_h * scene_w
  int sensor_h = 0, sensor_w = 0;
  int scene_h = 0, scene_w = 0;
  std::uint32_t depth_index = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  std::vector<float> matrix;  // row-major rows x cols

  float entry(int r, int c) const {
    return matrix[static_cast<std::size_t>(r) * cols + c];
  }
  double column_sum(int c) const;
};

/// Builds the depth-dependent transfer operator: a shared mode-mixing stage
/// (per-column random Gaussian blobs on the sensor, seeded per column from
/// the config seed) composed with a geometric stage that magnifies by
/// ref_depth/d about the grid center and blurs with sigma0 * d / ref_depth.
TransferOperator build_operator(const OpticalConfig& config, int depth_index);

/// Applies the operator to each channel independently. Output is analog
/// (not quantized); values stay in [0,1] because row sums are capped at 1.
Image forward(const TransferOperator& op, const Image& scene);

/// 8-bit sensing: optional read + shot Gaussian noise from a seeded stream,
/// clamp to [0,1], then round half away from zero onto the k/255 grid.
Image sense(const Image& analog, const NoiseParams& noise,
            std::uint64_t rng_seed);

/// Corner-aligned bilinear resampling; out dims must not exceed in dims.
Image downsample_bilinear(const Image& img, int out_h, int out_w);

/// Full angle subtended by an object of size_cm at distance_cm, in degrees.
double angular_extent_deg(double size_cm, double distance_cm);

// "TOP1" operator file: magic TOP1; LE u32 rows, cols, depth_index;
// u64 seed, config_digest; then rows*cols f32 LE row-major.
void save_operator(const TransferOperator& op,
                   const std::filesystem::path& path);
TransferOperator load_operator(const std::filesystem::path& path);

}  // namespace pipecam
