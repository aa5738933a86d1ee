#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "pipecam/datagen.hpp"
#include "pipecam/errors.hpp"

using namespace pipecam;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pipecam_datagen" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("glyph generation: empty, deterministic, label histogram") {
  std::vector<int> labels;
  CHECK(gen_glyphs(0, 10, 32, 1, &labels).empty());
  CHECK(labels.empty());

  auto a = gen_glyphs(20, 10, 32, 7, &labels);
  std::vector<int> labels_b;
  auto b = gen_glyphs(20, 10, 32, 7, &labels_b);
  REQUIRE(a.size() == b.size());
  CHECK(labels == labels_b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].data == b[i].data);
  for (const auto& img : a) {
    bool any = false;
    for (float v : img.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
      any = any || v > 0.1f;
    }
    CHECK(any);  // a glyph is actually drawn
  }

  gen_glyphs(1000, 10, 16, 7, &labels);
  std::vector<int> hist(10, 0);
  for (int l : labels) hist[l]++;
  for (int c : hist) {
    // expected 100 per class, binomial bound 5*sqrt(100)
    CHECK(c > 50);
    CHECK(c < 150);
  }
}

TEST_CASE("glyph class budget is enforced") {
  CHECK(glyph_class_count() == 47);
  CHECK_THROWS_AS(gen_glyphs(1, 48, 32, 1, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(gen_glyphs(1, 10, 8, 1, nullptr), std::invalid_argument);
}

TEST_CASE("colorize tints nonzero pixels with one triple per image") {
  const auto glyphs = gen_glyphs(3, 5, 32, 3, nullptr);
  const Image color = colorize(glyphs[0], 11);
  REQUIRE(color.channels == 3);

  const Image again = colorize(glyphs[0], 11);
  CHECK(color.data == again.data);

  Image zeros(1, 16, 16);
  const Image black = colorize(zeros, 5);
  for (float v : black.data) CHECK(v == 0.0f);

  // one tint per image: channel ratios constant across nonzero pixels
  double ratio01 = -1.0, ratio02 = -1.0;
  for (std::size_t i = 0; i < glyphs[0].pixels_per_channel(); ++i) {
    const float g = glyphs[0].data[i];
    if (g < 0.5f) continue;
    const double r01 = color.channel(0)[i] / color.channel(1)[i];
    const double r02 = color.channel(0)[i] / color.channel(2)[i];
    if (ratio01 < 0) {
      ratio01 = r01;
      ratio02 = r02;
    } else {
      CHECK(r01 == doctest::Approx(ratio01).epsilon(1e-4));
      CHECK(r02 == doctest::Approx(ratio02).epsilon(1e-4));
    }
    CHECK(color.channel(0)[i] <= g);
    CHECK(color.channel(0)[i] >= 0.25f * g - 1e-6f);
  }

  CHECK_THROWS_AS(colorize(color, 1), std::invalid_argument);
}

TEST_CASE("squares stay inside the declared field") {
  const int dims = 32, field = 20, square = 3;
  const auto scenes = gen_squares(50, square, field, dims, 17);
  const int f0 = (dims - field) / 2;
  for (const auto& s : scenes) {
    int lit = 0;
    for (int y = 0; y < dims; ++y)
      for (int x = 0; x < dims; ++x)
        if (s.image.at(0, y, x) > 0.0f) {
          ++lit;
          CHECK(y >= f0);
          CHECK(y < f0 + field);
          CHECK(x >= f0);
          CHECK(x < f0 + field);
        }
    CHECK(lit == square * square);
    CHECK(s.center_y >= f0);
    CHECK(s.center_x < f0 + field);
  }
}

TEST_CASE("degenerate square fills the scene; oversize square is an error") {
  const auto full = gen_squares(1, 8, 8, 8, 1);
  for (float v : full[0].image.data) CHECK(v == 1.0f);
  CHECK_THROWS_AS(gen_squares(1, 9, 8, 16, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_squares(1, 2, 40, 32, 1), std::invalid_argument);
}

TEST_CASE("desk mapping of the small-square probe is one pixel") {
  // 2.6 mm squares on a 6.5 cm scene mapped to 32 px.
  CHECK(static_cast<int>(std::lround(32 * 0.26 / 6.5)) == 1);
}

TEST_CASE("IDX loader parses a hand-built file and reports format errors") {
  const auto dir = fresh_dir("idx");
  const auto good = dir / "good.idx";
  {
    std::ofstream f(good, std::ios::binary);
    const unsigned char bytes[] = {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2,
                                   0, 0, 0, 2, 0, 255, 128, 64};
    f.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
  }
  const auto images = load_idx(good);
  REQUIRE(images.size() == 1);
  CHECK(images[0].at(0, 0, 0) == 0.0f);
  CHECK(images[0].at(0, 0, 1) == 1.0f);
  CHECK(images[0].at(0, 1, 0) == 128.0f / 255.0f);
  CHECK(images[0].at(0, 1, 1) == 64.0f / 255.0f);

  const auto wrong_dims = dir / "vec.idx";
  {
    std::ofstream f(wrong_dims, std::ios::binary);
    const unsigned char bytes[] = {0, 0, 8, 1, 0, 0, 0, 4, 1, 2, 3, 4};
    f.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
  }
  CHECK_THROWS_WITH_AS(load_idx(wrong_dims),
                       doctest::Contains("dimension count"), FormatError);

  const auto trunc = dir / "trunc.idx";
  {
    std::ofstream f(trunc, std::ios::binary);
    const unsigned char bytes[] = {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2,
                                   0, 0, 0, 2, 0, 255};
    f.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
  }
  CHECK_THROWS_WITH_AS(load_idx(trunc), doctest::Contains("expected 4 bytes"),
                       FormatError);
}

TEST_CASE("split is exclusive, exhaustive and deterministic") {
  CHECK_THROWS_AS(make_split(10, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_split(10, 0, 1), std::invalid_argument);

  const auto a = make_split(5000, 1000, 9);
  const auto b = make_split(5000, 1000, 9);
  CHECK(a == b);
  long test_count = 0;
  for (auto s : a) test_count += s == Split::kTest ? 1 : 0;
  CHECK(test_count == 1000);

  const auto c = make_split(5000, 1000, 10);
  CHECK(a != c);
}

TEST_CASE("render_dataset with identity optics stores the quantized scene") {
  const auto dir = fresh_dir("identity_render");
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = cfg.sensor_h = cfg.sensor_w = 32;
  cfg.identity_mode = true;
  std::vector<int> labels;
  auto scenes = gen_glyphs(12, 5, 32, 21, &labels);

  RenderOptions opt;
  opt.config = cfg;
  opt.depth_policy = DepthPolicy::fixed(cfg.ref_depth_index());
  opt.noise.enabled = false;
  opt.seed = 77;
  opt.n_test_scenes = 3;
  opt.kind = DatasetKind::kGlyphs;
  opt.n_classes = 5;
  const auto manifest = render_dataset(dir, scenes, labels, opt);
  manifest.validate();
  CHECK(manifest.n_total == 12);
  CHECK(manifest.n_test == 3);

  for (const auto& row : manifest.rows) {
    const Image scene = read_image_8bit(dir / row.scene_path);
    const Image sensor = read_image_8bit(dir / row.sensor_path);
    const Image expected = quantize_8bit(scenes[row.id]);
    for (std::size_t i = 0; i < expected.data.size(); ++i)
      CHECK(sensor.data[i] == expected.data[i]);
    CHECK(scene.data == expected.data);
  }
}

TEST_CASE("all-depths rendering replicates each scene once per depth") {
  const auto dir = fresh_dir("alldepth_render");
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = 16;
  cfg.sensor_h = cfg.sensor_w = 20;
  auto scenes = gen_glyphs(10, 5, 16, 3, nullptr);

  RenderOptions opt;
  opt.config = cfg;
  opt.depth_policy = DepthPolicy::all();
  opt.seed = 5;
  opt.n_test_scenes = 2;
  const auto manifest = render_dataset(dir, scenes, {}, opt);
  manifest.validate();
  CHECK(manifest.n_total == 50);
  CHECK(manifest.n_test == 10);
  std::vector<int> per_depth(5, 0);
  for (const auto& row : manifest.rows) {
    REQUIRE(row.depth_index >= 0);
    REQUIRE(row.depth_index < 5);
    per_depth[row.depth_index]++;
  }
  for (int c : per_depth) CHECK(c == 10);

  // replicas of one scene share its split
  for (const auto& row : manifest.rows) {
    const auto scene_idx = row.id / 5;
    CHECK(row.split == manifest.rows[scene_idx * 5].split);
  }
}

TEST_CASE("rendering twice gives byte-identical trees") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = 16;
  cfg.sensor_h = cfg.sensor_w = 20;
  auto scenes = gen_glyphs(8, 4, 16, 13, nullptr);
  RenderOptions opt;
  opt.config = cfg;
  opt.depth_policy = DepthPolicy::fixed(2);
  opt.seed = 99;
  opt.n_test_scenes = 2;

  const auto dir_a = fresh_dir("repeat_a");
  const auto dir_b = fresh_dir("repeat_b");
  render_dataset(dir_a, scenes, {}, opt);
  render_dataset(dir_b, scenes, {}, opt);

  for (auto it = fs::recursive_directory_iterator(dir_a);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    const auto rel = fs::relative(it->path(), dir_a);
    std::ifstream fa(it->path(), std::ios::binary);
    std::ifstream fb(dir_b / rel, std::ios::binary);
    REQUIRE(fb.good());
    const std::string ba((std::istreambuf_iterator<char>(fa)), {});
    const std::string bb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(ba == bb);
  }
}

TEST_CASE("manifest round-trips and enforces exclusivity") {
  const auto dir = fresh_dir("manifest");
  DatasetManifest m;
  m.kind = DatasetKind::kSquares;
  m.n_total = 2;
  m.n_test = 1;
  m.n_classes = 0;
  m.seed = 3;
  m.config_digest = 12345;
  m.rows = {{0, "scenes/a.pgm", "sensors/a.pgm", kNoLabel, 2, Split::kTrain},
            {1, "scenes/b.pgm", "sensors/b.pgm", 4, kNoDepth, Split::kTest}};
  write_manifest(m, dir / "manifest.csv");
  const auto r = read_manifest(dir / "manifest.csv");
  CHECK(r.kind == DatasetKind::kSquares);
  CHECK(r.n_total == 2);
  CHECK(r.rows[0].label == kNoLabel);
  CHECK(r.rows[0].depth_index == 2);
  CHECK(r.rows[1].label == 4);
  CHECK(r.rows[1].depth_index == kNoDepth);
  CHECK(r.rows[1].split == Split::kTest);

  // duplicate id must be rejected
  DatasetManifest bad = m;
  bad.rows[1].id = 0;
  write_manifest(bad, dir / "bad.csv");
  CHECK_THROWS_AS(read_manifest(dir / "bad.csv"), FormatError);
}

TEST_CASE("centers sidecar round-trips") {
  const auto dir = fresh_dir("centers");
  const std::vector<std::pair<double, double>> centers = {{1.5, 2.0},
                                                          {15.25, 3.75}};
  write_centers(centers, dir / "centers.csv");
  const auto r = read_centers(dir / "centers.csv");
  REQUIRE(r.size() == 2);
  CHECK(r[0].first == 1.5);
  CHECK(r[1].second == 3.75);
}

TEST_CASE("PGM/PPM round-trip preserves quantized images") {
  const auto dir = fresh_dir("pnm");
  auto scenes = gen_glyphs(1, 3, 24, 5, nullptr);
  const Image q = quantize_8bit(scenes[0]);
  write_image_8bit(q, dir / "g.pgm");
  const Image r = read_image_8bit(dir / "g.pgm");
  CHECK(r.data == q.data);

  const Image color = quantize_8bit(colorize(scenes[0], 9));
  write_image_8bit(color, dir / "c.ppm");
  const Image rc = read_image_8bit(dir / "c.ppm");
  CHECK(rc.data == color.data);
  CHECK(rc.channels == 3);
}
