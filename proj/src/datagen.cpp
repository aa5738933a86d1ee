#include "pipecam/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "glyph_data.hpp"
#include "pipecam/errors.hpp"
#include "pipecam/parallel.hpp"
#include "pipecam/rng.hpp"

namespace pipecam {

void DatasetManifest::validate() const {
  if (rows.size() != n_total)
    throw FormatError("manifest: row count does not match n_total");
  std::set<std::uint64_t> ids;
  std::uint64_t test_count = 0;
  for (const auto& row : rows) {
    if (!ids.insert(row.id).second)
      throw FormatError("manifest: duplicate id " + std::to_string(row.id));
    if (row.split == Split::kTest) ++test_count;
    if (row.label != kNoLabel && n_classes > 0 && row.label >= n_classes)
      throw FormatError("manifest: label out of range for id " +
                        std::to_string(row.id));
  }
  if (test_count != n_test)
    throw FormatError("manifest: TEST row count " + std::to_string(test_count) +
                      " != n_test " + std::to_string(n_test));
}

std::string dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kGlyphs: return "glyphs";
    case DatasetKind::kSquares: return "squares";
    case DatasetKind::kFovSquares: return "fov_squares";
    case DatasetKind::kIdxImport: return "idx_import";
  }
  return "unknown";
}

DatasetKind dataset_kind_from_name(const std::string& name) {
  if (name == "glyphs") return DatasetKind::kGlyphs;
  if (name == "squares") return DatasetKind::kSquares;
  if (name == "fov_squares") return DatasetKind::kFovSquares;
  if (name == "idx_import") return DatasetKind::kIdxImport;
  throw FormatError("unknown dataset kind: " + name);
}

void write_manifest(const DatasetManifest& m,
                    const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "# kind=" << dataset_kind_name(m.kind) << "\n";
  f << "# n_total=" << m.n_total << "\n";
  f << "# n_test=" << m.n_test << "\n";
  f << "# n_classes=" << m.n_classes << "\n";
  f << "# seed=" << m.seed << "\n";
  f << "# config_digest=" << m.config_digest << "\n";
  f << "id,scene_path,sensor_path,label,depth_index,split\n";
  for (const auto& r : m.rows) {
    f << r.id << ',' << r.scene_path << ',' << r.sensor_path << ',';
    if (r.label != kNoLabel) f << r.label;
    f << ',';
    if (r.depth_index != kNoDepth) f << r.depth_index;
    f << ',' << (r.split == Split::kTest ? "TEST" : "TRAIN") << "\n";
  }
  if (!f) throw IoError("short write: " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  DatasetManifest m;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(2, eq - 2);
      std::string value = line.substr(eq + 1);
      if (key == "kind") m.kind = dataset_kind_from_name(value);
      else if (key == "n_total") m.n_total = std::stoull(value);
      else if (key == "n_test") m.n_test = std::stoull(value);
      else if (key == "n_classes") m.n_classes = std::stoi(value);
      else if (key == "seed") m.seed = std::stoull(value);
      else if (key == "config_digest") m.config_digest = std::stoull(value);
      continue;
    }
    if (!header_seen) {
      if (line != "id,scene_path,sensor_path,label,depth_index,split")
        throw FormatError("manifest: unexpected header in " + path.string());
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    ManifestRow row;
    std::getline(ss, field, ',');
    row.id = std::stoull(field);
    std::getline(ss, row.scene_path, ',');
    std::getline(ss, row.sensor_path, ',');
    std::getline(ss, field, ',');
    row.label = field.empty() ? kNoLabel : std::stoi(field);
    std::getline(ss, field, ',');
    row.depth_index = field.empty() ? kNoDepth : std::stoi(field);
    std::getline(ss, field, ',');
    if (field == "TRAIN") row.split = Split::kTrain;
    else if (field == "TEST") row.split = Split::kTest;
    else throw FormatError("manifest: bad split value '" + field + "'");
    m.rows.push_back(std::move(row));
  }
  m.validate();
  return m;
}

int glyph_class_count() {
  return static_cast<int>(detail::glyph_templates().size());
}

namespace {

float point_segment_distance(float px, float py, float ax, float ay, float bx,
                             float by) {
  const float dx = bx - ax, dy = by - ay;
  const float len2 = dx * dx + dy * dy;
  float t = 0.0f;
  if (len2 > 0.0f) {
    t = ((px - ax) * dx + (py - ay) * dy) / len2;
    t = std::clamp(t, 0.0f, 1.0f);
  }
  const float qx = ax + t * dx, qy = ay + t * dy;
  return std::hypot(px - qx, py - qy);
}

Image render_glyph(const detail::GlyphTemplate& tpl, int dims, double rot_deg,
                   double scale, double tx, double ty, double thickness) {
  Image img(1, dims, dims);
  const double unit = dims * 0.75 / 6.0;  // skeleton spans ~75% of the frame
  const double rot = rot_deg * std::numbers::pi / 180.0;
  const double cr = std::cos(rot), sr = std::sin(rot);
  const double cx = (dims - 1) / 2.0, cy = (dims - 1) / 2.0;
  const float hw = static_cast<float>(thickness / 2.0);

  auto map_point = [&](const detail::GlyphPoint& p) {
    const double gx = (p.first - 3.0) * unit * scale;
    const double gy = (p.second - 3.0) * unit * scale;
    return std::pair<float, float>(
        static_cast<float>(cr * gx - sr * gy + cx + tx),
        static_cast<float>(sr * gx + cr * gy + cy + ty));
  };

  for (const auto& stroke : tpl.strokes) {
    for (std::size_t s = 0; s + 1 < stroke.size(); ++s) {
      const auto [ax, ay] = map_point(stroke[s]);
      const auto [bx, by] = map_point(stroke[s + 1]);
      const float pad = hw + 1.5f;
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - pad)));
      const int x1 = std::min(dims - 1, static_cast<int>(std::ceil(std::max(ax, bx) + pad)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - pad)));
      const int y1 = std::min(dims - 1, static_cast<int>(std::ceil(std::max(ay, by) + pad)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const float d = point_segment_distance(static_cast<float>(x),
                                                 static_cast<float>(y), ax, ay,
                                                 bx, by);
          const float cov = std::clamp(hw + 0.5f - d, 0.0f, 1.0f);
          float& px = img.at(0, y, x);
          px = std::max(px, cov);
        }
      }
    }
  }
  return img;
}

}  // namespace

std::vector<Image> gen_glyphs(int n, int n_classes, int dims,
                              std::uint64_t seed, std::vector<int>* labels) {
  if (n < 0) throw std::invalid_argument("gen_glyphs: n must be >= 0");
  if (n_classes < 1 || n_classes > glyph_class_count())
    throw std::invalid_argument("gen_glyphs: n_classes must be in [1, " +
                                std::to_string(glyph_class_count()) + "]");
  if (dims < 16) throw std::invalid_argument("gen_glyphs: dims must be >= 16");

  const auto& templates = detail::glyph_templates();
  std::vector<Image> scenes(static_cast<std::size_t>(n));
  if (labels) labels->assign(static_cast<std::size_t>(n), 0);

  parallel_for(n, [&](long i) {
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    const int cls = static_cast<int>(rng.next_below(n_classes));
    const double rot = rng.uniform(-15.0, 15.0);
    const double scale = rng.uniform(0.8, 1.2);
    const double tx = rng.uniform(-0.1, 0.1) * dims;
    const double ty = rng.uniform(-0.1, 0.1) * dims;
    const double thickness = rng.uniform(1.0, 2.0);
    scenes[i] = render_glyph(templates[cls], dims, rot, scale, tx, ty,
                             thickness);
    if (labels) (*labels)[i] = cls;
  });
  return scenes;
}

Image colorize(const Image& gray, std::uint64_t rng_seed) {
  if (gray.channels != 1)
    throw std::invalid_argument("colorize: input must be single-channel");
  SplitMix64 rng(rng_seed);
  const double tint[3] = {rng.uniform(0.25, 1.0), rng.uniform(0.25, 1.0),
                          rng.uniform(0.25, 1.0)};
  Image out(3, gray.height, gray.width);
  for (int c = 0; c < 3; ++c) {
    const float t = static_cast<float>(tint[c]);
    float* dst = out.channel(c);
    const float* src = gray.channel(0);
    for (std::size_t i = 0; i < gray.pixels_per_channel(); ++i)
      dst[i] = src[i] * t;
  }
  return out;
}

std::vector<SquareScene> gen_squares(int n, int square_px, int field_px,
                                     int dims, std::uint64_t seed) {
  if (square_px < 1) throw std::invalid_argument("gen_squares: square_px >= 1");
  if (field_px > dims)
    throw std::invalid_argument("gen_squares: field exceeds scene dims");
  if (square_px > field_px)
    throw std::invalid_argument("gen_squares: square larger than field");

  const int fy0 = (dims - field_px) / 2;
  const int fx0 = (dims - field_px) / 2;
  const int slack = field_px - square_px;

  std::vector<SquareScene> out(static_cast<std::size_t>(n));
  parallel_for(n, [&](long i) {
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    const int oy = fy0 + static_cast<int>(rng.next_below(slack + 1));
    const int ox = fx0 + static_cast<int>(rng.next_below(slack + 1));
    Image img(1, dims, dims);
    for (int y = oy; y < oy + square_px; ++y)
      for (int x = ox; x < ox + square_px; ++x) img.at(0, y, x) = 1.0f;
    out[i] = {std::move(img), oy + (square_px - 1) / 2.0,
              ox + (square_px - 1) / 2.0};
  });
  return out;
}

std::vector<Image> load_idx(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  unsigned char magic[4] = {};
  f.read(reinterpret_cast<char*>(magic), 4);
  if (f.gcount() != 4)
    throw FormatError("truncated IDX magic at byte offset 0: " + path.string());
  if (magic[0] != 0 || magic[1] != 0)
    throw FormatError("bad IDX magic (first two bytes nonzero) at byte offset 0: " +
                      path.string());
  if (magic[2] != 0x08)
    throw FormatError("IDX data type " + std::to_string(magic[2]) +
                      " unsupported (expected 8 = unsigned byte) at byte offset 2: " +
                      path.string());
  if (magic[3] != 3)
    throw FormatError("IDX dimension count " + std::to_string(magic[3]) +
                      " unsupported (expected 3) at byte offset 3: " +
                      path.string());
  auto read_u32be = [&](std::streamoff off) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (f.gcount() != 4)
      throw FormatError("truncated IDX header at byte offset " +
                        std::to_string(off) + ": " + path.string());
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
  };
  const std::uint32_t n = read_u32be(4);
  const std::uint32_t h = read_u32be(8);
  const std::uint32_t w = read_u32be(12);
  const std::uint64_t expected =
      static_cast<std::uint64_t>(n) * h * w;
  std::vector<unsigned char> payload(expected);
  f.read(reinterpret_cast<char*>(payload.data()),
         static_cast<std::streamsize>(expected));
  const auto got = static_cast<std::uint64_t>(f.gcount());
  if (got != expected)
    throw FormatError("truncated IDX payload: expected " +
                      std::to_string(expected) + " bytes from offset 16, got " +
                      std::to_string(got) + ": " + path.string());
  std::vector<Image> images(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Image img(1, static_cast<int>(h), static_cast<int>(w));
    const unsigned char* src = payload.data() + static_cast<std::size_t>(i) * h * w;
    for (std::size_t p = 0; p < static_cast<std::size_t>(h) * w; ++p)
      img.data[p] = src[p] / 255.0f;
    images[i] = std::move(img);
  }
  return images;
}

std::vector<Split> make_split(std::uint64_t n_total, std::uint64_t n_test,
                              std::uint64_t seed) {
  if (n_test == 0 || n_test >= n_total)
    throw std::invalid_argument("split: need 0 < n_test < n_total");
  std::vector<std::uint64_t> ids(n_total);
  std::iota(ids.begin(), ids.end(), 0);
  SplitMix64 rng(seed);
  for (std::uint64_t i = n_total - 1; i > 0; --i) {
    const std::uint64_t j = rng.next_below(i + 1);
    std::swap(ids[i], ids[j]);
  }
  std::vector<Split> split(n_total, Split::kTrain);
  for (std::uint64_t i = 0; i < n_test; ++i) split[ids[i]] = Split::kTest;
  return split;
}

DatasetManifest render_dataset(const std::filesystem::path& out_dir,
                               const std::vector<Image>& scenes,
                               const std::vector<int>& labels,
                               const RenderOptions& opt) {
  opt.config.validate();
  opt.noise.validate();
  if (scenes.empty()) throw std::invalid_argument("render_dataset: no scenes");
  if (!labels.empty() && labels.size() != scenes.size())
    throw std::invalid_argument("render_dataset: label count mismatch");
  for (const auto& s : scenes)
    if (s.height != opt.config.scene_h || s.width != opt.config.scene_w ||
        s.channels != opt.config.channels)
      throw std::invalid_argument(
          "render_dataset: scene dims/channels do not match config");

  const std::size_t n_scenes = scenes.size();
  const int n_depths = static_cast<int>(opt.config.depths_cm.size());
  const int replicas = opt.depth_policy.all_depths ? n_depths : 1;

  std::vector<TransferOperator> ops;
  if (opt.depth_policy.all_depths) {
    ops.reserve(n_depths);
    for (int d = 0; d < n_depths; ++d)
      ops.push_back(build_operator(opt.config, d));
  } else {
    ops.push_back(build_operator(opt.config, opt.depth_policy.fixed_index));
  }

  std::vector<Split> scene_split(n_scenes, Split::kTrain);
  if (opt.n_test_scenes > 0)
    scene_split = make_split(n_scenes, opt.n_test_scenes,
                             derive_named(opt.seed, "split"));

  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "scenes");
  fs::create_directories(out_dir / "sensors");

  const char* ext = opt.config.channels == 3 ? ".ppm" : ".pgm";
  auto padded = [](std::uint64_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05llu", static_cast<unsigned long long>(v));
    return std::string(buf);
  };

  DatasetManifest m;
  m.kind = opt.kind;
  m.n_total = n_scenes * replicas;
  m.n_test = opt.n_test_scenes * replicas;
  m.n_classes = opt.n_classes;
  m.seed = opt.seed;
  m.config_digest = opt.config.digest();
  m.rows.resize(m.n_total);

  parallel_for(static_cast<long>(n_scenes), [&](long s) {
    const std::string scene_rel = "scenes/" + padded(s) + ext;
    write_image_8bit(scenes[s], out_dir / scene_rel);
    for (int rep = 0; rep < replicas; ++rep) {
      const std::uint64_t id = static_cast<std::uint64_t>(s) * replicas + rep;
      const int depth_index =
          opt.depth_policy.all_depths ? rep : opt.depth_policy.fixed_index;
      const auto& op = ops[opt.depth_policy.all_depths ? rep : 0];
      const Image sensor =
          sense(forward(op, scenes[s]), opt.noise, splitmix64_hash(opt.seed ^ id));
      const std::string sensor_rel = "sensors/" + padded(id) + ext;
      write_image_8bit(sensor, out_dir / sensor_rel);
      ManifestRow row;
      row.id = id;
      row.scene_path = scene_rel;
      row.sensor_path = sensor_rel;
      row.label = labels.empty() ? kNoLabel : labels[s];
      row.depth_index = depth_index;
      row.split = scene_split[s];
      m.rows[id] = std::move(row);
    }
  });

  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

void write_centers(const std::vector<std::pair<double, double>>& centers,
                   const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "id,center_y,center_x\n";
  f.precision(17);
  for (std::size_t i = 0; i < centers.size(); ++i)
    f << i << ',' << centers[i].first << ',' << centers[i].second << "\n";
}

std::vector<std::pair<double, double>> read_centers(
    const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  std::string line;
  std::getline(f, line);
  if (line != "id,center_y,center_x")
    throw FormatError("bad centers header in " + path.string());
  std::vector<std::pair<double, double>> centers;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    std::getline(ss, field, ',');
    const double cy = std::stod(field);
    std::getline(ss, field, ',');
    const double cx = std::stod(field);
    centers.emplace_back(cy, cx);
  }
  return centers;
}

}  // namespace pipecam
