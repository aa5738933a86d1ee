#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pipecam {

/// Intensity grid in [0,1], 1 or 3 channels, channel-major row-major storage.
/// Used for both object-plane scenes and sensor-plane recordings; `quantized`
/// marks images whose every value is k/255.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  bool quantized = false;
  std::vector<float> data;

  Image() = default;
  Image(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, 0.0f) {}

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  const float* channel(int c) const {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }
  float* channel(int c) {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }

  std::size_t pixels_per_channel() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

/// True when all values are finite and inside [0,1].
bool in_unit_range(const Image& img);

/// Round half away from zero to the 8-bit grid; sets `quantized`.
Image quantize_8bit(const Image& img);

/// Binary PGM (P5) for 1 channel, PPM (P6) for 3 channels, maxval 255.
void write_image_8bit(const Image& img, const std::filesystem::path& path);
Image read_image_8bit(const std::filesystem::path& path);

}  // namespace pipecam
