#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "pipecam/datagen.hpp"
#include "pipecam/image.hpp"
#include "pipecam/nn/network.hpp"
#include "pipecam/report.hpp"

namespace pipecam {

struct TrainConfig {
  int epochs = 30;       // the full-scale classifier protocol uses 35
  int batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct Sample {
  std::uint64_t id = 0;
  Image scene;
  Image sensor;
  int label = kNoLabel;
  int depth_index = kNoDepth;
  Split split = Split::kTrain;
};

struct LoadOptions {
  bool load_scenes = true;
  bool load_sensors = true;
  std::optional<Split> split_filter;
};

struct LoadedDataset {
  std::filesystem::path dir;
  DatasetManifest manifest;
  std::vector<Sample> samples;
  std::uint64_t manifest_digest = 0;

  int scene_channels() const;
};

LoadedDataset load_dataset(const std::filesystem::path& dir,
                           const LoadOptions& options = {});

/// One dataset per depth index, carved out of an all-depths dataset.
std::vector<LoadedDataset> split_by_depth(const LoadedDataset& data);

// ------------------------------------------------------------- networks --

/// Encoder-decoder reconstruction net with two skip connections. Blocks are
/// conv3x3 -> ReLU -> conv3x3 -> ReLU -> batchnorm; widths 16/32/64; the
/// head is a 1x1 conv + sigmoid. h, w must be divisible by 4.
nn::NetworkSpec build_recon_net(int channels, int h, int w);

/// Depth classifier: conv+ReLU+BN pairs with a maxpool after every two
/// blocks, widths 16/16/32/32/64, global average pool, dense head.
nn::NetworkSpec build_depth_net(int h, int w, int n_depths,
                                int in_channels = 1);

/// Compact image classifier: six conv+ReLU+BN blocks, widths
/// (16,16,32,32,64,64), maxpool after blocks 2 and 4, global average pool,
/// dense head.
nn::NetworkSpec build_classifier_net(int h, int w, int n_classes,
                                     int in_channels = 1);

// ------------------------------------------------------------- training --

struct TrainLog {
  std::vector<double> epoch_losses;
};

std::uint64_t weights_digest(const nn::WeightStore& weights);

/// Trains the reconstruction net on (downsampled sensor -> scene) pairs from
/// the TRAIN split. Color channels are routed through the shared
/// single-channel network as independent samples.
nn::WeightStore train_recon(const LoadedDataset& data, const TrainConfig& cfg,
                            TrainLog* log = nullptr);

/// Per-image SSIM and MAE of reconstructions against ground-truth scenes
/// over the TEST split. Refuses TRAIN samples.
ExperimentReport eval_recon(const LoadedDataset& test_data,
                            const nn::WeightStore& weights);

/// Pixel mean of TRAIN-split scenes (reference baseline for reconstruction).
Image mean_scene_image(const LoadedDataset& data);

/// Applies the reconstruction net (infer mode) to one recorded sensor image.
Image reconstruct_image(const nn::NetworkSpec& spec,
                        const nn::WeightStore& weights, const Image& sensor);

struct DepthAggregate {
  int depth_index = 0;
  double depth_cm = 0.0;
  double mean_ssim = 0.0;
  double mean_mae = 0.0;
  int n = 0;
};

/// Evaluates fixed reconstruction weights across per-depth test sets; the
/// datasets must share one scene population.
std::vector<DepthAggregate> dof_sweep(const nn::WeightStore& weights,
                                      const std::vector<LoadedDataset>& per_depth,
                                      const std::vector<double>& depths_cm);

int dof_argmax_ssim(const std::vector<DepthAggregate>& curve);

// -------------------------------------------------------- classification --

struct ClassifyEval {
  double accuracy = 0.0;
  std::vector<long> confusion;  // n_classes x n_classes
  ExperimentReport report;
};

/// Depth-from-raw-sensor classifier. Labels are the depth indices recorded
/// in the manifest. `label_permutation_seed` scrambles the training labels
/// (chance-level control).
nn::WeightStore train_depth(const LoadedDataset& data, int n_depths,
                            const TrainConfig& cfg, TrainLog* log = nullptr,
                            std::optional<std::uint64_t> label_permutation_seed =
                                std::nullopt);

ClassifyEval eval_depth(const LoadedDataset& test_data, int n_depths,
                        const nn::WeightStore& weights);

enum class ClassifyDomain { kRaw, kRecon };

/// Glyph-class classifier on either the raw (downsampled) sensor images or
/// on frozen-net reconstructions of them.
nn::WeightStore train_classify(const LoadedDataset& data, int n_classes,
                               ClassifyDomain domain,
                               const nn::WeightStore* recon_weights,
                               const TrainConfig& cfg, TrainLog* log = nullptr);

ClassifyEval eval_classify(const LoadedDataset& test_data, int n_classes,
                           ClassifyDomain domain,
                           const nn::WeightStore* recon_weights,
                           const nn::WeightStore& weights);

struct PairedClassifyResult {
  double raw_accuracy = 0.0;
  double recon_accuracy = 0.0;
  ExperimentReport report;  // both accuracies and their signed difference
};

/// Trains and evaluates both domains with identical seeds and sample order,
/// so the accuracy difference is attributable to the domain alone.
PairedClassifyResult classify_paired(const LoadedDataset& data, int n_classes,
                                     const nn::WeightStore& recon_weights,
                                     const TrainConfig& cfg);

// ----------------------------------------------------- resolution / FOV --

using Reconstructor = std::function<Image(const Image& sensor)>;

Reconstructor make_reconstructor(const nn::NetworkSpec& spec,
                                 const nn::WeightStore& weights);

struct ResolutionResult {
  struct PerSize {
    int square_px = 0;
    double mean_ssim = 0.0;
    int n = 0;
  };
  std::vector<PerSize> per_size;
  bool resolved = false;
  int smallest_px = 0;
  double angular_deg = 0.0;
};

/// Mean reconstruction SSIM per square size; the smallest size clearing the
/// threshold is converted to a full angle via the physical scene width.
ResolutionResult resolution_experiment(
    const std::vector<std::pair<int, LoadedDataset>>& per_size,
    const Reconstructor& reconstruct, double scene_cm = 6.5,
    double distance_cm = 35.0, double ssim_threshold = 0.6);

struct FovResult {
  struct Bin {
    double radius_lo_px = 0.0;
    double radius_hi_px = 0.0;
    double mean_ssim = 0.0;
    int n = 0;
  };
  std::vector<Bin> bins;
  bool any_reliable = false;
  double max_radius_px = 0.0;
  double fov_deg = 0.0;
};

/// Bins test squares by ground-truth center radius; per-bin SSIM is scored
/// on a window around the true square. Empty bins are reported with n = 0.
FovResult fov_experiment(const LoadedDataset& data,
                         const std::vector<std::pair<double, double>>& centers,
                         const Reconstructor& reconstruct,
                         double scene_cm = 21.0, double distance_cm = 35.0,
                         double ssim_threshold = 0.6,
                         double bin_width_px = 2.0);

}  // namespace pipecam
