#include "pipecam/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "pipecam/errors.hpp"

namespace pipecam {

bool in_unit_range(const Image& img) {
  for (float v : img.data) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) return false;
  }
  return true;
}

Image quantize_8bit(const Image& img) {
  Image out = img;
  for (float& v : out.data) {
    float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    v = std::floor(c * 255.0f + 0.5f) / 255.0f;
  }
  out.quantized = true;
  return out;
}

void write_image_8bit(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_image_8bit: channels must be 1 or 3");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << (img.channels == 1 ? "P5" : "P6") << "\n"
    << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) *
                                 img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        float v = img.at(c, y, x);
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        row[static_cast<std::size_t>(x) * img.channels + c] =
            static_cast<unsigned char>(std::floor(v * 255.0f + 0.5f));
      }
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw IoError("short write: " + path.string());
}

namespace {

int read_pnm_token(std::istream& in, const std::filesystem::path& path) {
  // Skips whitespace and '#' comments between header fields.
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    }
    c = in.get();
  }
  if (c == EOF) throw FormatError("truncated header: " + path.string());
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

Image read_image_8bit(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  int channels;
  if (m0 == 'P' && m1 == '5') {
    channels = 1;
  } else if (m0 == 'P' && m1 == '6') {
    channels = 3;
  } else {
    throw FormatError("bad PNM magic at offset 0: " + path.string());
  }
  const int w = read_pnm_token(f, path);
  const int h = read_pnm_token(f, path);
  const int maxval = read_pnm_token(f, path);
  if (maxval != 255)
    throw FormatError("unsupported maxval " + std::to_string(maxval) + ": " +
                      path.string());
  if (w <= 0 || h <= 0)
    throw FormatError("bad dimensions in " + path.string());
  Image img(channels, h, w);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * channels);
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size()));
    if (f.gcount() != static_cast<std::streamsize>(row.size()))
      throw FormatError("truncated pixel data at row " + std::to_string(y) +
                        ": " + path.string());
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) =
            row[static_cast<std::size_t>(x) * channels + c] / 255.0f;
  }
  img.quantized = true;
  return img;
}

}  // namespace pipecam
