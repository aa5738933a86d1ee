#include "pipecam/optics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "pipecam/errors.hpp"
#include "pipecam/rng.hpp"

namespace pipecam {

void OpticalConfig::validate() const {
  auto dim_ok = [](int d) { return d >= 4 && d <= 256; };
  if (!dim_ok(scene_h) || !dim_ok(scene_w) || !dim_ok(sensor_h) ||
      !dim_ok(sensor_w))
    throw std::invalid_argument("optical config: dims must be in [4, 256]");
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("optical config: channels must be 1 or 3");
  if (depths_cm.empty())
    throw std::invalid_argument("optical config: depths_cm empty");
  for (std::size_t i = 0; i < depths_cm.size(); ++i) {
    if (depths_cm[i] <= 0.0)
      throw std::invalid_argument("optical config: depths must be positive");
    if (i > 0 && depths_cm[i] <= depths_cm[i - 1])
      throw std::invalid_argument(
          "optical config: depths must be strictly increasing");
  }
  if (std::find(depths_cm.begin(), depths_cm.end(), ref_depth_cm) ==
      depths_cm.end())
    throw std::invalid_argument(
        "optical config: ref_depth_cm must be one of depths_cm");
  if (blur_sigma0 <= 0.0)
    throw std::invalid_argument("optical config: blur_sigma0 must be > 0");
  if (blobs_per_column < 1)
    throw std::invalid_argument("optical config: blobs_per_column must be >= 1");
  if (blob_width_min <= 0.0 || blob_width_min > blob_width_max)
    throw std::invalid_argument("optical config: bad blob width range");
}

int OpticalConfig::ref_depth_index() const {
  for (std::size_t i = 0; i < depths_cm.size(); ++i)
    if (depths_cm[i] == ref_depth_cm) return static_cast<int>(i);
  throw std::invalid_argument("optical config: ref depth not in depth list");
}

std::uint64_t OpticalConfig::digest() const {
  // FNV-1a over a canonical byte serialization of every field.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  auto mix_i64 = [&](std::int64_t v) { mix(&v, sizeof v); };
  auto mix_f64 = [&](double v) { mix(&v, sizeof v); };
  mix_i64(scene_h);
  mix_i64(scene_w);
  mix_i64(channels);
  mix_i64(sensor_h);
  mix_i64(sensor_w);
  mix_i64(static_cast<std::int64_t>(depths_cm.size()));
  for (double d : depths_cm) mix_f64(d);
  mix_f64(ref_depth_cm);
  mix_f64(blur_sigma0);
  mix_i64(blobs_per_column);
  mix_f64(blob_width_min);
  mix_f64(blob_width_max);
  mix(&seed, sizeof seed);
  mix_i64(identity_mode ? 1 : 0);
  return h;
}

void NoiseParams::validate() const {
  if (read_sigma < 0.0 || shot_sigma < 0.0)
    throw std::invalid_argument("noise params: sigmas must be >= 0");
}

double TransferOperator::column_sum(int c) const {
  double s = 0.0;
  for (int r = 0; r < rows; ++r) s += entry(r, c);
  return s;
}

namespace {

// Mode-mixing matrix, stored column-major (one contiguous sensor vector per
// facet pixel): column k is a sum of blobs_per_column Gaussian blobs on the
// sensor grid, normalized to column sum 1, then globally rescaled so the
// maximum row sum is <= 1 (per-pixel passivity).
std::vector<double> build_mode_mixer(const OpticalConfig& cfg) {
  const int rows = cfg.sensor_h * cfg.sensor_w;
  const int cols = cfg.scene_h * cfg.scene_w;
  std::vector<double> m(static_cast<std::size_t>(cols) * rows, 0.0);

  for (int k = 0; k < cols; ++k) {
    double* col = &m[static_cast<std::size_t>(k) * rows];
    SplitMix64 rng(derive_stream(cfg.seed, static_cast<std::uint64_t>(k)));
    for (int b = 0; b < cfg.blobs_per_column; ++b) {
      const double cy = rng.uniform(0.0, cfg.sensor_h - 1.0);
      const double cx = rng.uniform(0.0, cfg.sensor_w - 1.0);
      const double w = rng.uniform(cfg.blob_width_min, cfg.blob_width_max);
      const double amp = rng.uniform(0.5, 1.0);
      const double inv2w2 = 1.0 / (2.0 * w * w);
      for (int y = 0; y < cfg.sensor_h; ++y) {
        const double dy2 = (y - cy) * (y - cy);
        for (int x = 0; x < cfg.sensor_w; ++x) {
          const double dx = x - cx;
          col[y * cfg.sensor_w + x] +=
              amp * std::exp(-(dy2 + dx * dx) * inv2w2);
        }
      }
    }
    double s = 0.0;
    for (int r = 0; r < rows; ++r) s += col[r];
    const double inv = 1.0 / s;  // blob peak is on-grid, so s > 0
    for (int r = 0; r < rows; ++r) col[r] *= inv;
  }

  std::vector<double> row_sums(rows, 0.0);
  for (int k = 0; k < cols; ++k) {
    const double* col = &m[static_cast<std::size_t>(k) * rows];
    for (int r = 0; r < rows; ++r) row_sums[r] += col[r];
  }
  const double max_row = *std::max_element(row_sums.begin(), row_sums.end());
  if (max_row > 1.0) {
    // Margin keeps row sums strictly below 1 after float rounding.
    const double scale = 1.0 / (max_row * (1.0 + 1e-6));
    for (double& v : m) v *= scale;
  }
  return m;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable zero-boundary convolution on a scene_h x scene_w grid.
void blur_inplace(std::vector<double>& img, int h, int w,
                  const std::vector<double>& kernel,
                  std::vector<double>& tmp) {
  const int radius = static_cast<int>(kernel.size() / 2);
  tmp.assign(img.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = img[static_cast<std::size_t>(y) * w + x];
      if (v == 0.0) continue;
      for (int t = -radius; t <= radius; ++t) {
        const int xx = x + t;
        if (xx >= 0 && xx < w)
          tmp[static_cast<std::size_t>(y) * w + xx] += v * kernel[t + radius];
      }
    }
  }
  std::fill(img.begin(), img.end(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = tmp[static_cast<std::size_t>(y) * w + x];
      if (v == 0.0) continue;
      for (int t = -radius; t <= radius; ++t) {
        const int yy = y + t;
        if (yy >= 0 && yy < h)
          img[static_cast<std::size_t>(yy) * w + x] += v * kernel[t + radius];
      }
    }
  }
}

}  // namespace

TransferOperator build_operator(const OpticalConfig& cfg, int depth_index) {
  cfg.validate();
  if (depth_index < 0 ||
      depth_index >= static_cast<int>(cfg.depths_cm.size()))
    throw std::invalid_argument("build_operator: depth_index out of range");

  TransferOperator op;
  op.rows = cfg.sensor_h * cfg.sensor_w;
  op.cols = cfg.scene_h * cfg.scene_w;
  op.sensor_h = cfg.sensor_h;
  op.sensor_w = cfg.sensor_w;
  op.scene_h = cfg.scene_h;
  op.scene_w = cfg.scene_w;
  op.depth_index = static_cast<std::uint32_t>(depth_index);
  op.seed = cfg.seed;
  op.config_digest = cfg.digest();

  if (cfg.identity_mode) {
    if (cfg.scene_h != cfg.sensor_h || cfg.scene_w != cfg.sensor_w)
      throw std::invalid_argument(
          "identity_mode requires scene dims == sensor dims");
    op.matrix.assign(static_cast<std::size_t>(op.rows) * op.cols, 0.0f);
    for (int i = 0; i < op.rows; ++i)
      op.matrix[static_cast<std::size_t>(i) * op.cols + i] = 1.0f;
    return op;
  }

  const double d = cfg.depths_cm[depth_index];
  const double mag = cfg.ref_depth_cm / d;
  const double sigma = cfg.blur_sigma0 * d / cfg.ref_depth_cm;
  const auto kernel = gaussian_kernel(sigma);
  const auto mixer = build_mode_mixer(cfg);

  const int sh = cfg.scene_h, sw = cfg.scene_w;
  const double cy = (sh - 1) / 2.0, cx = (sw - 1) / 2.0;

  op.matrix.assign(static_cast<std::size_t>(op.rows) * op.cols, 0.0f);
  std::vector<double> col(static_cast<std::size_t>(sh) * sw);
  std::vector<double> tmp(col.size());
  std::vector<double> acc(op.rows);

  for (int k = 0; k < op.cols; ++k) {
    const int ky = k / sw, kx = k % sw;
    // Geometric stage column: a unit impulse scaled about the center by the
    // magnification (splatted with the pull-bilinear footprint), then blurred.
    std::fill(col.begin(), col.end(), 0.0);
    const double qy = cy + mag * (ky - cy);
    const double qx = cx + mag * (kx - cx);
    const int y0 = std::max(0, static_cast<int>(std::floor(qy - mag)));
    const int y1 = std::min(sh - 1, static_cast<int>(std::ceil(qy + mag)));
    const int x0 = std::max(0, static_cast<int>(std::floor(qx - mag)));
    const int x1 = std::min(sw - 1, static_cast<int>(std::ceil(qx + mag)));
    for (int y = y0; y <= y1; ++y) {
      const double wy =
          std::max(0.0, 1.0 - std::abs(cy + (y - cy) / mag - ky));
      if (wy == 0.0) continue;
      for (int x = x0; x <= x1; ++x) {
        const double wx =
            std::max(0.0, 1.0 - std::abs(cx + (x - cx) / mag - kx));
        if (wx > 0.0) col[static_cast<std::size_t>(y) * sw + x] = wy * wx;
      }
    }
    blur_inplace(col, sh, sw, kernel, tmp);

    std::fill(acc.begin(), acc.end(), 0.0);
    for (int f = 0; f < op.cols; ++f) {
      const double v = col[f];
      if (v == 0.0) continue;
      const double* mix_col = &mixer[static_cast<std::size_t>(f) * op.rows];
      for (int r = 0; r < op.rows; ++r) acc[r] += mix_col[r] * v;
    }
    double col_sum = 0.0;
    for (double v : acc) col_sum += v;
    // Composition is unit-sum in exact arithmetic for interior columns;
    // columns near unit mass are pulled a hair below 1 so that column sums
    // stay <= 1 after float rounding.
    constexpr double kCap = 1.0 - 1e-6;
    const double scale = col_sum > kCap ? kCap / col_sum : 1.0;
    for (int r = 0; r < op.rows; ++r)
      op.matrix[static_cast<std::size_t>(r) * op.cols + k] =
          static_cast<float>(acc[r] * scale);
  }
  return op;
}

Image forward(const TransferOperator& op, const Image& scene) {
  if (scene.height != op.scene_h || scene.width != op.scene_w)
    throw std::invalid_argument("forward: scene dims do not match operator");
  Image out(scene.channels, op.sensor_h, op.sensor_w);
  for (int c = 0; c < scene.channels; ++c) {
    const float* x = scene.channel(c);
    float* y = out.channel(c);
    for (int r = 0; r < op.rows; ++r) {
      const float* row = &op.matrix[static_cast<std::size_t>(r) * op.cols];
      double acc = 0.0;
      for (int k = 0; k < op.cols; ++k) acc += static_cast<double>(row[k]) * x[k];
      y[r] = static_cast<float>(acc);
    }
  }
  return out;
}

Image sense(const Image& analog, const NoiseParams& noise,
            std::uint64_t rng_seed) {
  noise.validate();
  Image out = analog;
  if (noise.enabled) {
    SplitMix64 rng(rng_seed);
    for (float& v : out.data) {
      auto [z0, z1] = rng.next_gaussian_pair();
      const double base = std::max(0.0, static_cast<double>(v));
      v = static_cast<float>(v + noise.read_sigma * z0 +
                             noise.shot_sigma * std::sqrt(base) * z1);
    }
  }
  return quantize_8bit(out);
}

Image downsample_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("downsample: output dims must be positive");
  if (out_h > img.height || out_w > img.width)
    throw std::invalid_argument("downsample: output exceeds input dims");
  Image out(img.channels, out_h, out_w);
  const auto src_coord = [](int i, int out_n, int in_n) {
    if (out_n == 1) return (in_n - 1) / 2.0;
    return static_cast<double>(i) * (in_n - 1) / (out_n - 1);
  };
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const double sy = src_coord(y, out_h, img.height);
      const int y0 = static_cast<int>(sy);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double fy = sy - y0;
      for (int x = 0; x < out_w; ++x) {
        const double sx = src_coord(x, out_w, img.width);
        const int x0 = static_cast<int>(sx);
        const int x1 = std::min(x0 + 1, img.width - 1);
        const double fx = sx - x0;
        const double v = (1 - fy) * ((1 - fx) * img.at(c, y0, x0) +
                                     fx * img.at(c, y0, x1)) +
                         fy * ((1 - fx) * img.at(c, y1, x0) +
                               fx * img.at(c, y1, x1));
        out.at(c, y, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

double angular_extent_deg(double size_cm, double distance_cm) {
  if (size_cm <= 0.0 || distance_cm <= 0.0)
    throw std::invalid_argument("angular_extent_deg: inputs must be > 0");
  return 2.0 * std::atan((size_cm / 2.0) / distance_cm) * 180.0 /
         std::numbers::pi;
}

namespace {

template <typename T>
void write_le(std::ofstream& f, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  f.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& f, const std::filesystem::path& path,
          std::streamoff offset) {
  unsigned char b[sizeof(T)];
  f.read(reinterpret_cast<char*>(b), sizeof(T));
  if (f.gcount() != sizeof(T))
    throw FormatError("truncated at byte offset " + std::to_string(offset) +
                      ": " + path.string());
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void save_operator(const TransferOperator& op,
                   const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write("TOP1", 4);
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(op.rows));
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(op.cols));
  write_le<std::uint32_t>(f, op.depth_index);
  write_le<std::uint64_t>(f, op.seed);
  write_le<std::uint64_t>(f, op.config_digest);
  f.write(reinterpret_cast<const char*>(op.matrix.data()),
          static_cast<std::streamsize>(op.matrix.size() * sizeof(float)));
  if (!f) throw IoError("short write: " + path.string());
}

TransferOperator load_operator(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  char magic[4] = {};
  f.read(magic, 4);
  if (f.gcount() != 4 || std::memcmp(magic, "TOP1", 4) != 0)
    throw FormatError("bad operator magic at byte offset 0: " + path.string());
  TransferOperator op;
  op.rows = static_cast<int>(read_le<std::uint32_t>(f, path, 4));
  op.cols = static_cast<int>(read_le<std::uint32_t>(f, path, 8));
  op.depth_index = read_le<std::uint32_t>(f, path, 12);
  op.seed = read_le<std::uint64_t>(f, path, 16);
  op.config_digest = read_le<std::uint64_t>(f, path, 24);
  if (op.rows <= 0 || op.cols <= 0)
    throw FormatError("bad operator dims in " + path.string());
  op.matrix.resize(static_cast<std::size_t>(op.rows) * op.cols);
  f.read(reinterpret_cast<char*>(op.matrix.data()),
         static_cast<std::streamsize>(op.matrix.size() * sizeof(float)));
  if (f.gcount() !=
      static_cast<std::streamsize>(op.matrix.size() * sizeof(float)))
    throw FormatError(
        "truncated operator payload (expected " +
        std::to_string(op.matrix.size() * sizeof(float)) + " bytes from offset 32, got " +
        std::to_string(f.gcount()) + "): " + path.string());
  // Grid shapes are not stored in the file; square grids are inferred where
  // possible and callers that know the true shapes may overwrite them.
  auto near_square = [](int n) {
    int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return (r * r == n) ? r : 0;
  };
  op.sensor_h = op.sensor_w = near_square(op.rows);
  op.scene_h = op.scene_w = near_square(op.cols);
  return op;
}

}  // namespace pipecam
