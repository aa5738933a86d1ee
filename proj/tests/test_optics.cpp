#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pipecam/errors.hpp"
#include "pipecam/optics.hpp"
#include "pipecam/rng.hpp"

using namespace pipecam;
namespace fs = std::filesystem;

namespace {

OpticalConfig identity_config(int dims) {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = cfg.sensor_h = cfg.sensor_w = dims;
  cfg.identity_mode = true;
  return cfg;
}

Image random_scene(int channels, int h, int w, std::uint64_t seed) {
  Image img(channels, h, w);
  SplitMix64 rng(seed);
  for (auto& v : img.data) v = static_cast<float>(rng.next_unit());
  return img;
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "pipecam_optics_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("identity mode yields the identity matrix") {
  const auto op = build_operator(identity_config(8), 0);
  REQUIRE(op.rows == 64);
  REQUIRE(op.cols == 64);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c)
      CHECK(op.entry(r, c) == (r == c ? 1.0f : 0.0f));
}

TEST_CASE("identity mode requires matching grids") {
  OpticalConfig cfg = identity_config(8);
  cfg.sensor_h = cfg.sensor_w = 10;
  CHECK_THROWS_AS(build_operator(cfg, 0), std::invalid_argument);
}

TEST_CASE("depth index is validated") {
  OpticalConfig cfg;
  CHECK_THROWS_AS(build_operator(cfg, 5), std::invalid_argument);
  CHECK_THROWS_AS(build_operator(cfg, -1), std::invalid_argument);
}

TEST_CASE("config invariants are enforced") {
  OpticalConfig cfg;
  cfg.depths_cm = {35.0, 29.0};  // not increasing
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = OpticalConfig{};
  cfg.ref_depth_cm = 30.0;  // not a member
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = OpticalConfig{};
  cfg.blob_width_min = 3.5;  // above max
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = OpticalConfig{};
  cfg.scene_h = 2;  // too small
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("default operator at the reference depth has column sums in (0,1]") {
  OpticalConfig cfg;  // seed 42
  const auto op = build_operator(cfg, cfg.ref_depth_index());
  for (int c = 0; c < op.cols; ++c) {
    const double s = op.column_sum(c);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
  }
  for (float v : op.matrix) CHECK(v >= 0.0f);
}

TEST_CASE("operator construction is deterministic") {
  OpticalConfig cfg;
  const auto a = build_operator(cfg, 1);
  const auto b = build_operator(cfg, 1);
  REQUIRE(a.matrix.size() == b.matrix.size());
  CHECK(std::memcmp(a.matrix.data(), b.matrix.data(),
                    a.matrix.size() * sizeof(float)) == 0);
}

TEST_CASE("operators at distinct depths are distinguishable") {
  OpticalConfig cfg;
  const auto a = build_operator(cfg, 0);
  const auto b = build_operator(cfg, 2);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < a.matrix.size(); ++i)
    max_diff = std::max(max_diff,
                        std::abs(static_cast<double>(a.matrix[i]) - b.matrix[i]));
  CHECK(max_diff > 1e-3);
}

TEST_CASE("forward of a zero scene is zero") {
  OpticalConfig cfg;
  const auto op = build_operator(cfg, 2);
  const Image zero(1, cfg.scene_h, cfg.scene_w);
  const Image out = forward(op, zero);
  for (float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("forward of an impulse returns the matching column") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = 16;
  cfg.sensor_h = cfg.sensor_w = 20;
  const auto op = build_operator(cfg, 2);
  const int k = 5 * 16 + 11;
  Image impulse(1, 16, 16);
  impulse.data[k] = 1.0f;
  const Image out = forward(op, impulse);
  for (int r = 0; r < op.rows; ++r)
    CHECK(out.data[r] == doctest::Approx(op.entry(r, k)).epsilon(1e-12));
}

TEST_CASE("forward agrees with an independent dense matvec oracle") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = 16;
  cfg.sensor_h = cfg.sensor_w = 20;
  const auto op = build_operator(cfg, 0);
  const Image x = random_scene(1, 16, 16, 99);
  const Image y = forward(op, x);
  for (int r = 0; r < op.rows; ++r) {
    long double acc = 0.0L;
    for (int c = 0; c < op.cols; ++c)
      acc += static_cast<long double>(op.entry(r, c)) * x.data[c];
    CHECK(std::abs(static_cast<double>(acc) - y.data[r]) < 1e-6);
  }
}

TEST_CASE("superposition holds to 1e-6 over random scene pairs") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = 16;
  cfg.sensor_h = cfg.sensor_w = 20;
  const auto op = build_operator(cfg, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Image x = random_scene(1, 16, 16, 1000 + trial);
    const Image y = random_scene(1, 16, 16, 2000 + trial);
    Image mix(1, 16, 16);
    for (std::size_t i = 0; i < mix.data.size(); ++i)
      mix.data[i] = 0.3f * x.data[i] + 0.7f * y.data[i];
    const Image fx = forward(op, x);
    const Image fy = forward(op, y);
    const Image fmix = forward(op, mix);
    for (std::size_t i = 0; i < fmix.data.size(); ++i)
      worst = std::max(worst,
                       std::abs(fmix.data[i] - (0.3 * fx.data[i] + 0.7 * fy.data[i])));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("passivity: unit-range scenes give unit-range analog output") {
  OpticalConfig cfg;
  const auto op = build_operator(cfg, 0);
  Image ones(1, cfg.scene_h, cfg.scene_w);
  std::fill(ones.data.begin(), ones.data.end(), 1.0f);
  const Image bright = forward(op, ones);
  for (float v : bright.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  const Image x = random_scene(1, cfg.scene_h, cfg.scene_w, 4);
  const Image y = forward(op, x);
  for (float v : y.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("channels pass through the same matrix independently") {
  OpticalConfig cfg;
  cfg.channels = 3;
  const auto op = build_operator(cfg, 2);
  const Image color = random_scene(3, cfg.scene_h, cfg.scene_w, 11);
  const Image out = forward(op, color);
  for (int c = 0; c < 3; ++c) {
    Image mono(1, cfg.scene_h, cfg.scene_w);
    std::copy(color.channel(c), color.channel(c) + mono.data.size(),
              mono.data.begin());
    const Image ref = forward(op, mono);
    for (std::size_t i = 0; i < ref.data.size(); ++i)
      CHECK(out.channel(c)[i] == ref.data[i]);
  }
}

TEST_CASE("sense quantizes half away from zero") {
  NoiseParams off;
  off.enabled = false;
  Image analog(1, 4, 4);
  std::fill(analog.data.begin(), analog.data.end(), 0.5f);
  const Image q = sense(analog, off, 1);
  for (float v : q.data) CHECK(v == 128.0f / 255.0f);
  CHECK(q.quantized);

  std::fill(analog.data.begin(), analog.data.end(), 1.0f);
  const Image q1 = sense(analog, off, 1);
  for (float v : q1.data) CHECK(v == 1.0f);
}

TEST_CASE("sense with the same seed is deterministic, and idempotent without noise") {
  NoiseParams noisy;
  Image analog = random_scene(1, 8, 8, 77);
  const Image a = sense(analog, noisy, 123);
  const Image b = sense(analog, noisy, 123);
  CHECK(a.data == b.data);
  const Image c = sense(analog, noisy, 124);
  CHECK(a.data != c.data);

  NoiseParams off;
  off.enabled = false;
  const Image once = sense(analog, off, 0);
  const Image twice = sense(once, off, 0);
  CHECK(once.data == twice.data);
}

TEST_CASE("downsample: constants, identity size, and the 2x2 center case") {
  Image constant(3, 6, 5);
  std::fill(constant.data.begin(), constant.data.end(), 0.42f);
  const Image small = downsample_bilinear(constant, 3, 2);
  for (float v : small.data) CHECK(v == doctest::Approx(0.42).epsilon(1e-6));

  Image checker(1, 2, 2);
  checker.at(0, 0, 0) = 0.0f;
  checker.at(0, 0, 1) = 1.0f;
  checker.at(0, 1, 0) = 1.0f;
  checker.at(0, 1, 1) = 0.0f;
  const Image center = downsample_bilinear(checker, 1, 1);
  CHECK(center.data[0] == doctest::Approx(0.5).epsilon(1e-12));

  const Image same = downsample_bilinear(checker, 2, 2);
  CHECK(same.data == checker.data);

  CHECK_THROWS_AS(downsample_bilinear(checker, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(downsample_bilinear(checker, 4, 4), std::invalid_argument);
}

TEST_CASE("angular extents match the published geometry") {
  CHECK(angular_extent_deg(6.5, 35.0) == doctest::Approx(10.62).epsilon(0.005));
  CHECK(angular_extent_deg(11.0, 35.0) == doctest::Approx(17.86).epsilon(0.005));
  CHECK(angular_extent_deg(0.26, 35.0) == doctest::Approx(0.426).epsilon(0.01));
  CHECK_THROWS_AS(angular_extent_deg(0.0, 35.0), std::invalid_argument);
  CHECK_THROWS_AS(angular_extent_deg(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("TOP1 files round-trip byte-for-byte") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = 8;
  cfg.sensor_h = cfg.sensor_w = 10;
  const auto op = build_operator(cfg, 1);
  const auto dir = temp_dir();
  const auto p1 = dir / "op_a.top1";
  const auto p2 = dir / "op_b.top1";
  save_operator(op, p1);
  const auto loaded = load_operator(p1);
  CHECK(loaded.rows == op.rows);
  CHECK(loaded.cols == op.cols);
  CHECK(loaded.depth_index == op.depth_index);
  CHECK(loaded.seed == op.seed);
  CHECK(loaded.config_digest == op.config_digest);
  CHECK(loaded.matrix == op.matrix);
  save_operator(loaded, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}

TEST_CASE("TOP1 loader reports bad magic and truncation with offsets") {
  const auto dir = temp_dir();
  const auto bad = dir / "bad.top1";
  {
    std::ofstream f(bad, std::ios::binary);
    f << "NOPE" << std::string(28, '\0');
  }
  CHECK_THROWS_WITH_AS(load_operator(bad),
                       doctest::Contains("byte offset 0"), FormatError);

  const auto trunc = dir / "trunc.top1";
  {
    OpticalConfig cfg = identity_config(8);
    const auto op = build_operator(cfg, 0);
    save_operator(op, trunc);
    fs::resize_file(trunc, 100);  // chop the payload
  }
  CHECK_THROWS_AS(load_operator(trunc), FormatError);
}

TEST_CASE("config digest tracks every field") {
  OpticalConfig a, b;
  CHECK(a.digest() == b.digest());
  b.seed = 43;
  CHECK(a.digest() != b.digest());
  b = a;
  b.blur_sigma0 = 1.5;
  CHECK(a.digest() != b.digest());
  b = a;
  b.depths_cm.push_back(44.0);
  CHECK(a.digest() != b.digest());
}
