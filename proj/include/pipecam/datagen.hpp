#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pipecam/image.hpp"
#include "pipecam/optics.hpp"

namespace pipecam {

enum class Split { kTrain, kTest };

enum class DatasetKind { kGlyphs, kSquares, kFovSquares, kIdxImport };

constexpr int kNoLabel = -1;
constexpr int kNoDepth = -1;

struct ManifestRow {
  std::uint64_t id = 0;
  std::string scene_path;
  std::string sensor_path;
  int label = kNoLabel;
  int depth_index = kNoDepth;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  DatasetKind kind = DatasetKind::kGlyphs;
  std::uint64_t n_total = 0;
  std::uint64_t n_test = 0;
  int n_classes = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  std::vector<ManifestRow> rows;

  void validate() const;  // split exclusivity, counts
};

std::string dataset_kind_name(DatasetKind kind);
DatasetKind dataset_kind_from_name(const std::string& name);

// CSV schema: id,scene_path,sensor_path,label,depth_index,split with a
// leading '# key=value' metadata block. Empty label/depth fields mean NONE.
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Number of distinct glyph stroke templates shipped with the generator.
int glyph_class_count();

/// Renders `n` glyph scenes: per sample a class is drawn, its fixed polyline
/// skeleton is jittered (rotation +-15 deg, scale 0.8-1.2, translation +-10%
/// of dims, stroke 1-2 px) and rasterized with anti-aliasing into [0,1].
std::vector<Image> gen_glyphs(int n, int n_classes, int dims,
                              std::uint64_t seed, std::vector<int>* labels);

/// One RGB tint per image, components uniform in [0.25, 1]; zeros stay zero.
Image colorize(const Image& gray, std::uint64_t rng_seed);

struct SquareScene {
  Image image;
  double center_y = 0.0;  // pixel-center coordinates
  double center_x = 0.0;
};

/// One filled square of side square_px per scene, uniformly positioned inside
/// the centered field_px x field_px region; intensity 1.
std::vector<SquareScene> gen_squares(int n, int square_px, int field_px,
                                     int dims, std::uint64_t seed);

/// IDX unsigned-byte image file (magic 0x00000803), values scaled to [0,1].
std::vector<Image> load_idx(const std::filesystem::path& path);

/// Uniformly random n_test-subset marked TEST via Fisher-Yates; the rest
/// TRAIN. Requires 0 < n_test < n_total.
std::vector<Split> make_split(std::uint64_t n_total, std::uint64_t n_test,
                              std::uint64_t seed);

struct DepthPolicy {
  bool all_depths = false;
  int fixed_index = 0;
  static DepthPolicy fixed(int index) { return {false, index}; }
  static DepthPolicy all() { return {true, 0}; }
};

struct RenderOptions {
  OpticalConfig config;
  DepthPolicy depth_policy;
  NoiseParams noise;
  std::uint64_t seed = 0;
  std::uint64_t n_test_scenes = 0;  // scene-level; replicas inherit the split
  DatasetKind kind = DatasetKind::kGlyphs;
  int n_classes = 0;
};

/// Renders scenes through the simulator and writes scenes/, sensors/ and
/// manifest.csv under out_dir. Sample id ordering is scene-major; the
/// per-sample sensing seed is splitmix64(seed XOR id) so content does not
/// depend on rendering order.
DatasetManifest render_dataset(const std::filesystem::path& out_dir,
                               const std::vector<Image>& scenes,
                               const std::vector<int>& labels,
                               const RenderOptions& options);

/// Ground-truth square centers sidecar (id,center_y,center_x).
void write_centers(const std::vector<std::pair<double, double>>& centers,
                   const std::filesystem::path& path);
std::vector<std::pair<double, double>> read_centers(
    const std::filesystem::path& path);

}  // namespace pipecam
