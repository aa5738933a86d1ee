#include "pipecam/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pipecam/errors.hpp"
#include "pipecam/metrics.hpp"
#include "pipecam/nn/loss.hpp"
#include "pipecam/nn/optim.hpp"
#include "pipecam/optics.hpp"
#include "pipecam/rng.hpp"

namespace pipecam {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train config: epochs >= 1");
  if (batch_size < 2)
    throw std::invalid_argument("train config: batch_size >= 2 (batchnorm)");
  if (lr <= 0.0) throw std::invalid_argument("train config: lr > 0");
}

int LoadedDataset::scene_channels() const {
  if (samples.empty() || samples[0].scene.channels == 0)
    throw std::invalid_argument("dataset has no loaded scenes");
  return samples[0].scene.channels;
}

LoadedDataset load_dataset(const std::filesystem::path& dir,
                           const LoadOptions& options) {
  LoadedDataset data;
  data.dir = dir;
  data.manifest = read_manifest(dir / "manifest.csv");
  data.manifest_digest = file_digest(dir / "manifest.csv");
  for (const auto& row : data.manifest.rows) {
    if (options.split_filter && row.split != *options.split_filter) continue;
    Sample s;
    s.id = row.id;
    s.label = row.label;
    s.depth_index = row.depth_index;
    s.split = row.split;
    if (options.load_scenes) s.scene = read_image_8bit(dir / row.scene_path);
    if (options.load_sensors) s.sensor = read_image_8bit(dir / row.sensor_path);
    data.samples.push_back(std::move(s));
  }
  return data;
}

std::vector<LoadedDataset> split_by_depth(const LoadedDataset& data) {
  int max_depth = -1;
  for (const auto& s : data.samples) {
    if (s.depth_index == kNoDepth)
      throw std::invalid_argument("split_by_depth: sample " +
                                  std::to_string(s.id) + " has no depth");
    max_depth = std::max(max_depth, s.depth_index);
  }
  std::vector<LoadedDataset> out(static_cast<std::size_t>(max_depth) + 1);
  for (auto& d : out) {
    d.dir = data.dir;
    d.manifest = data.manifest;
    d.manifest.rows.clear();
    d.manifest_digest = data.manifest_digest;
  }
  for (const auto& s : data.samples) out[s.depth_index].samples.push_back(s);
  return out;
}

// --------------------------------------------------------------- builders --

namespace {

using nn::LayerSpec;

void append_recon_block(std::vector<LayerSpec>& layers, int in_c, int out_c) {
  layers.push_back(LayerSpec::conv(in_c, out_c, 3));
  layers.push_back(LayerSpec::relu());
  layers.push_back(LayerSpec::conv(out_c, out_c, 3));
  layers.push_back(LayerSpec::relu());
  layers.push_back(LayerSpec::batchnorm(out_c));
}

}  // namespace

nn::NetworkSpec build_recon_net(int channels, int h, int w) {
  if (h % 4 != 0 || w % 4 != 0)
    throw std::invalid_argument("build_recon_net: dims must be divisible by 4");
  nn::NetworkSpec spec;
  spec.in_channels = channels;
  spec.in_h = h;
  spec.in_w = w;
  spec.loss = nn::LossKind::kBcePixelwise;
  auto& L = spec.layers;

  append_recon_block(L, channels, 16);   // 0..4, enc1 out = 4
  const int enc1 = 4;
  L.push_back(LayerSpec::maxpool2());    // 5
  append_recon_block(L, 16, 32);         // 6..10, enc2 out = 10
  const int enc2 = 10;
  L.push_back(LayerSpec::maxpool2());    // 11
  append_recon_block(L, 32, 64);         // 12..16, bottleneck
  L.push_back(LayerSpec::upsample2());   // 17
  L.push_back(LayerSpec::concat(enc2));  // 18: 64 + 32 = 96
  append_recon_block(L, 96, 32);         // 19..23
  L.push_back(LayerSpec::upsample2());   // 24
  L.push_back(LayerSpec::concat(enc1));  // 25: 32 + 16 = 48
  append_recon_block(L, 48, 16);         // 26..30
  L.push_back(LayerSpec::conv(16, channels, 1));  // 31
  L.push_back(LayerSpec::sigmoid());              // 32
  spec.shapes();
  return spec;
}

nn::NetworkSpec build_depth_net(int h, int w, int n_depths, int in_channels) {
  if (h % 4 != 0 || w % 4 != 0)
    throw std::invalid_argument("build_depth_net: dims must be divisible by 4");
  nn::NetworkSpec spec;
  spec.in_channels = in_channels;
  spec.in_h = h;
  spec.in_w = w;
  spec.loss = nn::LossKind::kSoftmaxCe;
  auto& L = spec.layers;
  auto block = [&L](int in_c, int out_c) {
    L.push_back(LayerSpec::conv(in_c, out_c, 3));
    L.push_back(LayerSpec::relu());
    L.push_back(LayerSpec::batchnorm(out_c));
  };
  block(in_channels, 16);
  block(16, 16);
  L.push_back(LayerSpec::maxpool2());
  block(16, 32);
  block(32, 32);
  L.push_back(LayerSpec::maxpool2());
  block(32, 64);
  L.push_back(LayerSpec::global_avg_pool());
  L.push_back(LayerSpec::dense(64, n_depths));
  spec.shapes();
  return spec;
}

nn::NetworkSpec build_classifier_net(int h, int w, int n_classes,
                                     int in_channels) {
  if (h % 4 != 0 || w % 4 != 0)
    throw std::invalid_argument(
        "build_classifier_net: dims must be divisible by 4");
  nn::NetworkSpec spec;
  spec.in_channels = in_channels;
  spec.in_h = h;
  spec.in_w = w;
  spec.loss = nn::LossKind::kSoftmaxCe;
  auto& L = spec.layers;
  auto block = [&L](int in_c, int out_c) {
    L.push_back(LayerSpec::conv(in_c, out_c, 3));
    L.push_back(LayerSpec::relu());
    L.push_back(LayerSpec::batchnorm(out_c));
  };
  block(in_channels, 16);
  block(16, 16);
  L.push_back(LayerSpec::maxpool2());
  block(16, 32);
  block(32, 32);
  L.push_back(LayerSpec::maxpool2());
  block(32, 64);
  block(64, 64);
  L.push_back(LayerSpec::global_avg_pool());
  L.push_back(LayerSpec::dense(64, n_classes));
  spec.shapes();
  return spec;
}

// ------------------------------------------------------- shared machinery --

namespace {

std::vector<const Sample*> split_samples(const LoadedDataset& data,
                                         Split split) {
  std::vector<const Sample*> out;
  for (const auto& s : data.samples)
    if (s.split == split) out.push_back(&s);
  return out;
}

void require_test_only(const LoadedDataset& data) {
  for (const auto& s : data.samples)
    if (s.split != Split::kTest)
      throw SplitGuardError("evaluation received TRAIN sample id " +
                            std::to_string(s.id));
}

void shuffle_indices(std::vector<int>& idx, SplitMix64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

/// Net input: the recorded sensor image resampled to the network grid.
Image net_input(const Image& sensor, int h, int w) {
  return downsample_bilinear(sensor, h, w);
}

void fill_channel(nn::Tensor& dst, int slot, const Image& img, int channel) {
  std::copy(img.channel(channel),
            img.channel(channel) + img.pixels_per_channel(),
            dst.sample(slot) + static_cast<std::size_t>(0));
}

void fill_all_channels(nn::Tensor& dst, int slot, const Image& img) {
  std::copy(img.data.begin(), img.data.end(), dst.sample(slot));
}

void zero_grads(nn::WeightStore& grads) {
  for (auto& [name, t] : grads) t.zero();
}

}  // namespace

std::uint64_t weights_digest(const nn::WeightStore& weights) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [name, t] : weights) {
    mix(name.data(), name.size());
    mix(t.v.data(), t.v.size() * sizeof(float));
  }
  return h;
}

// ---------------------------------------------------------------- recon --

nn::WeightStore train_recon(const LoadedDataset& data, const TrainConfig& cfg,
                            TrainLog* log) {
  cfg.validate();
  const auto train = split_samples(data, Split::kTrain);
  if (train.empty())
    throw std::invalid_argument("train_recon: empty training set");
  const int channels = train[0]->scene.channels;
  for (const auto* s : train)
    if (s->scene.channels != channels)
      throw std::invalid_argument("train_recon: mixed-channel dataset");
  const int sh = train[0]->scene.height, sw = train[0]->scene.width;

  const auto spec = build_recon_net(1, sh, sw);
  auto weights =
      nn::init_weights<float>(spec, derive_named(cfg.seed, "init"));

  std::vector<Image> inputs(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    inputs[i] = net_input(train[i]->sensor, sh, sw);

  // Each (sample, channel) pair is one training example through the shared
  // single-channel network.
  std::vector<std::pair<int, int>> entries;
  for (std::size_t i = 0; i < train.size(); ++i)
    for (int c = 0; c < channels; ++c)
      entries.emplace_back(static_cast<int>(i), c);

  const int last = static_cast<int>(spec.layers.size()) - 1;
  if (spec.layers[last].kind != nn::LayerKind::kSigmoid)
    throw std::logic_error("recon net must end with sigmoid");

  nn::AdamState opt;
  opt.lr = cfg.lr;
  auto grads = nn::make_gradient_store<float>(spec);
  nn::PassContext<float> ctx;
  nn::Tensor target, grad_logits;
  const std::uint64_t shuffle_seed = derive_named(cfg.seed, "shuffle");

  std::vector<int> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      SplitMix64 rng(derive_stream(shuffle_seed, epoch));
      shuffle_indices(order, rng);
    }
    double epoch_loss = 0.0;
    long seen = 0;
    for (std::size_t pos = 0; pos < order.size();) {
      const int b = static_cast<int>(
          std::min<std::size_t>(cfg.batch_size, order.size() - pos));
      if (b < 2) break;  // batchnorm cannot take a singleton remainder
      if (!ctx.input.same_dims(nn::Tensor(b, 1, sh, sw)))
        ctx.input = nn::Tensor(b, 1, sh, sw);
      if (!target.same_dims(ctx.input)) target = nn::Tensor(b, 1, sh, sw);
      for (int k = 0; k < b; ++k) {
        const auto [si, ch] = entries[order[pos + k]];
        fill_channel(ctx.input, k, inputs[si], ch);
        fill_channel(target, k, train[si]->scene, ch);
      }
      nn::forward_pass(spec, weights, ctx, true);
      const double loss =
          nn::bce_pixelwise(ctx.act[last], target, &grad_logits);
      zero_grads(grads);
      nn::backward_pass(spec, weights, ctx, grad_logits, last - 1, grads);
      nn::adam_step(weights, grads, opt);
      epoch_loss += loss * b;
      seen += b;
      pos += b;
    }
    if (log) log->epoch_losses.push_back(epoch_loss / std::max(1L, seen));
  }
  return weights;
}

Image reconstruct_image(const nn::NetworkSpec& spec,
                        const nn::WeightStore& weights, const Image& sensor) {
  const Image input = net_input(sensor, spec.in_h, spec.in_w);
  nn::PassContext<float> ctx;
  ctx.input = nn::Tensor(input.channels, 1, spec.in_h, spec.in_w);
  for (int c = 0; c < input.channels; ++c) fill_channel(ctx.input, c, input, c);
  auto& mutable_weights = const_cast<nn::WeightStore&>(weights);
  nn::forward_pass(spec, mutable_weights, ctx, false);
  const nn::Tensor& out = ctx.act.back();
  Image recon(input.channels, spec.in_h, spec.in_w);
  for (int c = 0; c < input.channels; ++c)
    std::copy(out.sample(c), out.sample(c) + recon.pixels_per_channel(),
              recon.channel(c));
  return recon;
}

ExperimentReport eval_recon(const LoadedDataset& test_data,
                            const nn::WeightStore& weights) {
  require_test_only(test_data);
  if (test_data.samples.empty())
    throw std::invalid_argument("eval_recon: empty test set");
  const int sh = test_data.samples[0].scene.height;
  const int sw = test_data.samples[0].scene.width;
  const auto spec = build_recon_net(1, sh, sw);

  ExperimentReport rep;
  rep.dataset_digest = test_data.manifest_digest;
  rep.weight_digest = weights_digest(weights);
  rep.config_digest = test_data.manifest.config_digest;

  double sum_ssim = 0.0, sum_mae = 0.0;
  for (const auto& s : test_data.samples) {
    const Image recon = reconstruct_image(spec, weights, s.sensor);
    const double sv = ssim(recon, s.scene);
    const double mv = mae(recon, s.scene);
    rep.add(s.id, "ssim", sv);
    rep.add(s.id, "mae", mv);
    sum_ssim += sv;
    sum_mae += mv;
  }
  const double n = static_cast<double>(test_data.samples.size());
  rep.add_aggregate("mean_ssim", sum_ssim / n);
  rep.add_aggregate("mean_mae", sum_mae / n);
  rep.add_aggregate("n", n);
  return rep;
}

Image mean_scene_image(const LoadedDataset& data) {
  const auto train = split_samples(data, Split::kTrain);
  if (train.empty())
    throw std::invalid_argument("mean_scene_image: no TRAIN samples");
  Image mean(train[0]->scene.channels, train[0]->scene.height,
             train[0]->scene.width);
  std::vector<double> acc(mean.data.size(), 0.0);
  for (const auto* s : train)
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s->scene.data[i];
  for (std::size_t i = 0; i < acc.size(); ++i)
    mean.data[i] = static_cast<float>(acc[i] / static_cast<double>(train.size()));
  return mean;
}

std::vector<DepthAggregate> dof_sweep(const nn::WeightStore& weights,
                                      const std::vector<LoadedDataset>& per_depth,
                                      const std::vector<double>& depths_cm) {
  if (per_depth.empty())
    throw std::invalid_argument("dof_sweep: no depth datasets");
  const std::size_t n0 = per_depth[0].samples.size();
  for (const auto& d : per_depth)
    if (d.samples.size() != n0)
      throw std::invalid_argument(
          "dof_sweep: depth sets have mismatched sample counts");

  std::vector<DepthAggregate> out;
  for (std::size_t di = 0; di < per_depth.size(); ++di) {
    const auto rep = eval_recon(per_depth[di], weights);
    DepthAggregate agg;
    agg.depth_index =
        per_depth[di].samples.empty() ? static_cast<int>(di)
                                      : per_depth[di].samples[0].depth_index;
    agg.depth_cm = agg.depth_index < static_cast<int>(depths_cm.size())
                       ? depths_cm[agg.depth_index]
                       : 0.0;
    agg.mean_ssim = rep.aggregate("mean_ssim");
    agg.mean_mae = rep.aggregate("mean_mae");
    agg.n = static_cast<int>(rep.aggregate("n"));
    out.push_back(agg);
  }
  return out;
}

int dof_argmax_ssim(const std::vector<DepthAggregate>& curve) {
  if (curve.empty()) throw std::invalid_argument("dof_argmax_ssim: empty");
  int best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].mean_ssim > curve[best].mean_ssim)
      best = static_cast<int>(i);
  return curve[best].depth_index;
}

// --------------------------------------------------------- classification --

namespace {

/// Shared CE-loss training loop for the depth and glyph classifiers.
nn::WeightStore train_ce_net(const nn::NetworkSpec& spec,
                             const std::vector<const Image*>& images,
                             const std::vector<int>& labels,
                             const TrainConfig& cfg, TrainLog* log) {
  auto weights =
      nn::init_weights<float>(spec, derive_named(cfg.seed, "init"));
  nn::AdamState opt;
  opt.lr = cfg.lr;
  auto grads = nn::make_gradient_store<float>(spec);
  nn::PassContext<float> ctx;
  nn::Tensor grad_logits;
  const int last = static_cast<int>(spec.layers.size()) - 1;
  const std::uint64_t shuffle_seed = derive_named(cfg.seed, "shuffle");

  std::vector<int> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      SplitMix64 rng(derive_stream(shuffle_seed, epoch));
      shuffle_indices(order, rng);
    }
    double epoch_loss = 0.0;
    long seen = 0;
    for (std::size_t pos = 0; pos < order.size();) {
      const int b = static_cast<int>(
          std::min<std::size_t>(cfg.batch_size, order.size() - pos));
      if (b < 2) break;
      const Image& first = *images[order[pos]];
      if (!ctx.input.same_dims(
              nn::Tensor(b, first.channels, first.height, first.width)))
        ctx.input = nn::Tensor(b, first.channels, first.height, first.width);
      batch_labels.resize(b);
      for (int k = 0; k < b; ++k) {
        const int si = order[pos + k];
        fill_all_channels(ctx.input, k, *images[si]);
        batch_labels[k] = labels[si];
      }
      nn::forward_pass(spec, weights, ctx, true);
      const double loss =
          nn::softmax_ce(ctx.act[last], batch_labels, &grad_logits);
      zero_grads(grads);
      nn::backward_pass(spec, weights, ctx, grad_logits, last, grads);
      nn::adam_step(weights, grads, opt);
      epoch_loss += loss * b;
      seen += b;
      pos += b;
    }
    if (log) log->epoch_losses.push_back(epoch_loss / std::max(1L, seen));
  }
  return weights;
}

ClassifyEval eval_ce_net(const nn::NetworkSpec& spec,
                         const nn::WeightStore& weights,
                         const std::vector<const Image*>& images,
                         const std::vector<int>& labels,
                         const std::vector<std::uint64_t>& ids, int n_classes) {
  nn::PassContext<float> ctx;
  auto& mutable_weights = const_cast<nn::WeightStore&>(weights);
  std::vector<int> predictions(images.size());
  const int last = static_cast<int>(spec.layers.size()) - 1;
  constexpr int kEvalBatch = 32;
  for (std::size_t pos = 0; pos < images.size(); pos += kEvalBatch) {
    const int b = static_cast<int>(
        std::min<std::size_t>(kEvalBatch, images.size() - pos));
    const Image& first = *images[pos];
    if (!ctx.input.same_dims(
            nn::Tensor(b, first.channels, first.height, first.width)))
      ctx.input = nn::Tensor(b, first.channels, first.height, first.width);
    for (int k = 0; k < b; ++k)
      fill_all_channels(ctx.input, k, *images[pos + k]);
    nn::forward_pass(spec, mutable_weights, ctx, false);
    for (int k = 0; k < b; ++k)
      predictions[pos + k] = nn::argmax_class(ctx.act[last], k);
  }

  ClassifyEval ev;
  ev.accuracy = accuracy(predictions, labels);
  ev.confusion = confusion(predictions, labels, n_classes);
  for (std::size_t i = 0; i < images.size(); ++i) {
    ev.report.add(ids[i], "predicted", predictions[i]);
    ev.report.add(ids[i], "correct", predictions[i] == labels[i] ? 1.0 : 0.0);
  }
  ev.report.add_aggregate("accuracy", ev.accuracy);
  ev.report.add_aggregate("n", static_cast<double>(images.size()));
  ev.report.weight_digest = weights_digest(weights);
  return ev;
}

}  // namespace

nn::WeightStore train_depth(const LoadedDataset& data, int n_depths,
                            const TrainConfig& cfg, TrainLog* log,
                            std::optional<std::uint64_t> label_permutation_seed) {
  cfg.validate();
  const auto train = split_samples(data, Split::kTrain);
  if (train.empty())
    throw std::invalid_argument("train_depth: empty training set");
  std::vector<Image> inputs(train.size());
  std::vector<int> labels(train.size());
  // Input grid: the scene grid when scenes are loaded, otherwise the sensor
  // grid scaled by the standard 1.25 downsampling factor.
  const int in_h = train[0]->scene.channels > 0
                       ? train[0]->scene.height
                       : (train[0]->sensor.height * 4) / 5;
  const int in_w = train[0]->scene.channels > 0
                       ? train[0]->scene.width
                       : (train[0]->sensor.width * 4) / 5;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i]->depth_index == kNoDepth)
      throw std::invalid_argument("train_depth: sample " +
                                  std::to_string(train[i]->id) +
                                  " is missing its depth label");
    inputs[i] = net_input(train[i]->sensor, in_h, in_w);
    labels[i] = train[i]->depth_index;
  }
  if (label_permutation_seed) {
    SplitMix64 rng(*label_permutation_seed);
    for (std::size_t i = labels.size(); i > 1; --i)
      std::swap(labels[i - 1], labels[rng.next_below(i)]);
  }
  const auto spec =
      build_depth_net(in_h, in_w, n_depths, inputs[0].channels);
  std::vector<const Image*> ptrs(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) ptrs[i] = &inputs[i];
  return train_ce_net(spec, ptrs, labels, cfg, log);
}

ClassifyEval eval_depth(const LoadedDataset& test_data, int n_depths,
                        const nn::WeightStore& weights) {
  require_test_only(test_data);
  if (test_data.samples.empty())
    throw std::invalid_argument("eval_depth: empty test set");
  const auto& first = test_data.samples[0];
  const int in_h = first.scene.channels > 0 ? first.scene.height
                                            : (first.sensor.height * 4) / 5;
  const int in_w = first.scene.channels > 0 ? first.scene.width
                                            : (first.sensor.width * 4) / 5;
  std::vector<Image> inputs(test_data.samples.size());
  std::vector<int> labels(test_data.samples.size());
  std::vector<std::uint64_t> ids(test_data.samples.size());
  for (std::size_t i = 0; i < test_data.samples.size(); ++i) {
    const auto& s = test_data.samples[i];
    if (s.depth_index == kNoDepth)
      throw std::invalid_argument("eval_depth: sample " + std::to_string(s.id) +
                                  " is missing its depth label");
    inputs[i] = net_input(s.sensor, in_h, in_w);
    labels[i] = s.depth_index;
    ids[i] = s.id;
  }
  const auto spec = build_depth_net(in_h, in_w, n_depths, inputs[0].channels);
  std::vector<const Image*> ptrs(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) ptrs[i] = &inputs[i];
  auto ev = eval_ce_net(spec, weights, ptrs, labels, ids, n_depths);
  ev.report.dataset_digest = test_data.manifest_digest;
  ev.report.config_digest = test_data.manifest.config_digest;
  return ev;
}

namespace {

std::vector<Image> classify_inputs(const std::vector<const Sample*>& samples,
                                   ClassifyDomain domain,
                                   const nn::WeightStore* recon_weights,
                                   int in_h, int in_w) {
  std::vector<Image> inputs(samples.size());
  if (domain == ClassifyDomain::kRaw) {
    for (std::size_t i = 0; i < samples.size(); ++i)
      inputs[i] = net_input(samples[i]->sensor, in_h, in_w);
    return inputs;
  }
  if (!recon_weights)
    throw std::invalid_argument(
        "classification in the RECON domain needs reconstruction weights");
  const auto recon_spec = build_recon_net(1, in_h, in_w);
  for (std::size_t i = 0; i < samples.size(); ++i)
    inputs[i] = reconstruct_image(recon_spec, *recon_weights,
                                  samples[i]->sensor);
  return inputs;
}

}  // namespace

nn::WeightStore train_classify(const LoadedDataset& data, int n_classes,
                               ClassifyDomain domain,
                               const nn::WeightStore* recon_weights,
                               const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  const auto train = split_samples(data, Split::kTrain);
  if (train.empty())
    throw std::invalid_argument("train_classify: empty training set");
  const int in_h = train[0]->scene.channels > 0
                       ? train[0]->scene.height
                       : (train[0]->sensor.height * 4) / 5;
  const int in_w = train[0]->scene.channels > 0
                       ? train[0]->scene.width
                       : (train[0]->sensor.width * 4) / 5;
  std::vector<int> labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i]->label == kNoLabel)
      throw std::invalid_argument("train_classify: sample " +
                                  std::to_string(train[i]->id) +
                                  " has no class label");
    labels[i] = train[i]->label;
  }
  const auto inputs =
      classify_inputs(train, domain, recon_weights, in_h, in_w);
  const auto spec =
      build_classifier_net(in_h, in_w, n_classes, inputs[0].channels);
  std::vector<const Image*> ptrs(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) ptrs[i] = &inputs[i];
  return train_ce_net(spec, ptrs, labels, cfg, log);
}

ClassifyEval eval_classify(const LoadedDataset& test_data, int n_classes,
                           ClassifyDomain domain,
                           const nn::WeightStore* recon_weights,
                           const nn::WeightStore& weights) {
  require_test_only(test_data);
  if (test_data.samples.empty())
    throw std::invalid_argument("eval_classify: empty test set");
  const auto& first = test_data.samples[0];
  const int in_h = first.scene.channels > 0 ? first.scene.height
                                            : (first.sensor.height * 4) / 5;
  const int in_w = first.scene.channels > 0 ? first.scene.width
                                            : (first.sensor.width * 4) / 5;
  std::vector<const Sample*> samples;
  for (const auto& s : test_data.samples) samples.push_back(&s);
  std::vector<int> labels(samples.size());
  std::vector<std::uint64_t> ids(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i]->label == kNoLabel)
      throw std::invalid_argument("eval_classify: sample " +
                                  std::to_string(samples[i]->id) +
                                  " has no class label");
    labels[i] = samples[i]->label;
    ids[i] = samples[i]->id;
  }
  const auto inputs =
      classify_inputs(samples, domain, recon_weights, in_h, in_w);
  const auto spec =
      build_classifier_net(in_h, in_w, n_classes, inputs[0].channels);
  std::vector<const Image*> ptrs(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) ptrs[i] = &inputs[i];
  auto ev = eval_ce_net(spec, weights, ptrs, labels, ids, n_classes);
  ev.report.dataset_digest = test_data.manifest_digest;
  ev.report.config_digest = test_data.manifest.config_digest;
  return ev;
}

PairedClassifyResult classify_paired(const LoadedDataset& data, int n_classes,
                                     const nn::WeightStore& recon_weights,
                                     const TrainConfig& cfg) {
  LoadedDataset test_view;
  test_view.dir = data.dir;
  test_view.manifest = data.manifest;
  test_view.manifest_digest = data.manifest_digest;
  for (const auto& s : data.samples)
    if (s.split == Split::kTest) test_view.samples.push_back(s);

  const auto raw_w = train_classify(data, n_classes, ClassifyDomain::kRaw,
                                    nullptr, cfg);
  const auto raw_ev = eval_classify(test_view, n_classes, ClassifyDomain::kRaw,
                                    nullptr, raw_w);
  const auto rec_w = train_classify(data, n_classes, ClassifyDomain::kRecon,
                                    &recon_weights, cfg);
  const auto rec_ev = eval_classify(test_view, n_classes,
                                    ClassifyDomain::kRecon, &recon_weights,
                                    rec_w);

  PairedClassifyResult out;
  out.raw_accuracy = raw_ev.accuracy;
  out.recon_accuracy = rec_ev.accuracy;
  for (const auto& r : raw_ev.report.rows)
    out.report.add(r.id, "raw_" + r.metric, r.value);
  for (const auto& r : rec_ev.report.rows)
    out.report.add(r.id, "recon_" + r.metric, r.value);
  out.report.add_aggregate("accuracy_raw", raw_ev.accuracy);
  out.report.add_aggregate("accuracy_recon", rec_ev.accuracy);
  out.report.add_aggregate("accuracy_diff",
                           rec_ev.accuracy - raw_ev.accuracy);
  out.report.dataset_digest = data.manifest_digest;
  out.report.config_digest = data.manifest.config_digest;
  return out;
}

// ------------------------------------------------------ resolution / FOV --

Reconstructor make_reconstructor(const nn::NetworkSpec& spec,
                                 const nn::WeightStore& weights) {
  return [spec, weights](const Image& sensor) {
    return reconstruct_image(spec, weights, sensor);
  };
}

ResolutionResult resolution_experiment(
    const std::vector<std::pair<int, LoadedDataset>>& per_size,
    const Reconstructor& reconstruct, double scene_cm, double distance_cm,
    double ssim_threshold) {
  if (per_size.empty())
    throw std::invalid_argument("resolution_experiment: no datasets");
  ResolutionResult out;
  for (const auto& [square_px, data] : per_size) {
    require_test_only(data);
    double sum = 0.0;
    for (const auto& s : data.samples)
      sum += ssim(reconstruct(s.sensor), s.scene);
    ResolutionResult::PerSize row;
    row.square_px = square_px;
    row.n = static_cast<int>(data.samples.size());
    row.mean_ssim = row.n > 0 ? sum / row.n : 0.0;
    out.per_size.push_back(row);
  }
  std::sort(out.per_size.begin(), out.per_size.end(),
            [](const auto& a, const auto& b) { return a.square_px < b.square_px; });
  const int scene_px = per_size[0].second.samples.empty()
                           ? 0
                           : per_size[0].second.samples[0].scene.width;
  for (const auto& row : out.per_size) {
    if (row.n > 0 && row.mean_ssim >= ssim_threshold) {
      out.resolved = true;
      out.smallest_px = row.square_px;
      out.angular_deg = angular_extent_deg(
          row.square_px * scene_cm / scene_px, distance_cm);
      break;
    }
  }
  return out;
}

FovResult fov_experiment(const LoadedDataset& data,
                         const std::vector<std::pair<double, double>>& centers,
                         const Reconstructor& reconstruct, double scene_cm,
                         double distance_cm, double ssim_threshold,
                         double bin_width_px) {
  require_test_only(data);
  if (data.samples.empty())
    throw std::invalid_argument("fov_experiment: empty dataset");
  const int dims = data.samples[0].scene.width;
  const double grid_c = (dims - 1) / 2.0;
  const double max_radius = std::hypot(grid_c, grid_c);
  const int n_bins =
      static_cast<int>(std::ceil(max_radius / bin_width_px)) + 1;

  std::vector<double> bin_sum(n_bins, 0.0);
  std::vector<int> bin_n(n_bins, 0);
  constexpr int kWin = 11;

  for (const auto& s : data.samples) {
    if (s.id >= centers.size())
      throw std::invalid_argument("fov_experiment: no center for sample " +
                                  std::to_string(s.id));
    const auto [cy, cx] = centers[s.id];
    const Image recon = reconstruct(s.sensor);
    // Local fidelity: SSIM on a window around the true square, clamped to
    // the image interior.
    const int oy = std::clamp(static_cast<int>(std::lround(cy)) - kWin / 2, 0,
                              dims - kWin);
    const int ox = std::clamp(static_cast<int>(std::lround(cx)) - kWin / 2, 0,
                              dims - kWin);
    Image patch_r(recon.channels, kWin, kWin), patch_t(recon.channels, kWin, kWin);
    for (int c = 0; c < recon.channels; ++c)
      for (int y = 0; y < kWin; ++y)
        for (int x = 0; x < kWin; ++x) {
          patch_r.at(c, y, x) = recon.at(c, oy + y, ox + x);
          patch_t.at(c, y, x) = s.scene.at(c, oy + y, ox + x);
        }
    const double sv = ssim(patch_r, patch_t);
    const double radius = std::hypot(cy - grid_c, cx - grid_c);
    const int bin = std::min(n_bins - 1,
                             static_cast<int>(radius / bin_width_px));
    bin_sum[bin] += sv;
    bin_n[bin] += 1;
  }

  FovResult out;
  for (int b = 0; b < n_bins; ++b) {
    FovResult::Bin bin;
    bin.radius_lo_px = b * bin_width_px;
    bin.radius_hi_px = (b + 1) * bin_width_px;
    bin.n = bin_n[b];
    bin.mean_ssim = bin_n[b] > 0 ? bin_sum[b] / bin_n[b] : 0.0;
    out.bins.push_back(bin);
    if (bin.n > 0 && bin.mean_ssim >= ssim_threshold) {
      out.any_reliable = true;
      out.max_radius_px = bin.radius_hi_px;
    }
  }
  if (out.any_reliable) {
    const double radius_cm = out.max_radius_px * scene_cm / dims;
    out.fov_deg = angular_extent_deg(2.0 * radius_cm, distance_cm);
  }
  return out;
}

}  // namespace pipecam
