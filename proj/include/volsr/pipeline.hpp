// Copyright 2026-present the volsr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "volsr/losses.hpp"
#include "volsr/models/discriminator.hpp"
#include "volsr/models/feature_extractor.hpp"
#include "volsr/models/generator.hpp"
#include "volsr/nn/param_store.hpp"
#include "volsr/rng.hpp"
#include "volsr/volume.hpp"

namespace volsr::pipeline {

// ---------------------------------------------------------------------------
// Patch sampling

enum class Weighting { Foreground, Uniform };

struct PatchSpec {
  std::int64_t hr_patch = 96;
  int scale = 4;
  Weighting weighting = Weighting::Foreground;

  std::int64_t lr_patch() const { return hr_patch / scale; }
  /// hr_patch must be divisible by 2*scale and by `multiple` (the
  /// discriminator's 2^depth).
  void validate(std::int64_t multiple = 1) const;
};

using Corner = std::array<std::int64_t, 3>;

struct PatchSample {
  Corner corner{};
  Volume patch;
};

/// Draws cubic patches from one volume. With Foreground weighting a corner
/// is chosen with probability proportional to the sum, over the patch, of
/// min-max normalized intensities strictly above the volume's 25th
/// percentile. If that mass is zero everywhere the draw is uniform.
class PatchSampler {
 public:
  PatchSampler(const Volume& volume, const PatchSpec& spec);

  PatchSample sample(Rng& rng) const;
  /// Corner for a uniform variate u in [0, 1); exposed for testing.
  Corner corner_for(double u) const;
  /// Unnormalized weight of the patch at `corner`.
  double weight(const Corner& corner) const;
  double total_weight() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  Shape3 corner_grid() const { return grid_; }

 private:
  const Volume* volume_;
  PatchSpec spec_;
  Shape3 grid_;
  std::vector<double> cumulative_;  // empty when the draw is uniform
};

PatchSample sample_patch_weighted(const Volume& hr, const PatchSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Training pairs

struct TrainingPair {
  nn::Tensor lr;  // (1,1,d,h,w)
  nn::Tensor hr;  // (1,1,s*d,s*h,s*w)
};

/// LR = k-space degradation of the patch; both members are then mapped with
/// the HR patch's min-max range, so LR values may fall slightly outside
/// [0, 1]. A constant patch maps to zeros.
TrainingPair make_training_pair(const Volume& hr_patch, int scale);

/// Whether pairs are built by degrading each sampled patch (the default), or
/// by degrading each whole volume once and cropping aligned LR/HR patches
/// from it without renormalization, which matches how full volumes are
/// degraded at inference time.
enum class PairSource { Patch, Volume };

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::int64_t steps = 1000;
  int batch_size = 1;
  std::uint64_t seed = 0;
  nn::AdamConfig gen_optimizer{};
  nn::AdamConfig disc_optimizer{};
  losses::LossWeights weights{};
  models::GeneratorConfig generator{};
  models::DiscriminatorConfig discriminator{};
  models::FeatureExtractorConfig extractor = models::FeatureExtractorConfig::standard();
  std::optional<std::filesystem::path> extractor_weights;  // random(seed) weights otherwise
  int perceptual_slice_stride = 1;
  PairSource pair_source = PairSource::Patch;
  std::int64_t checkpoint_every = 0;  // 0: no intermediate checkpoints
  std::optional<std::filesystem::path> checkpoint_dir;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainResult {
  nn::ParamStore generator;
  nn::ParamStore discriminator;
  std::vector<losses::LossReport> log;
};

using StepCallback = std::function<void(const losses::LossReport&)>;

/// Alternating GAN training: each step samples a batch, takes one
/// discriminator update on the detached SR batch, then one generator
/// update against the freshly updated (frozen) discriminator. Bit
/// reproducible for a fixed seed on one thread. A non-finite loss throws
/// NumericError carrying the step, loss components and parameter norm.
TrainResult train(const std::vector<Volume>& dataset, const TrainConfig& cfg, const PatchSpec& spec,
                  const StepCallback& on_step = {});

/// Generator checkpoint metadata: {"kind":"generator","config":...,"step":n}.
void save_generator(const std::filesystem::path& path, const nn::ParamStore& params,
                    const models::GeneratorConfig& cfg, std::int64_t step);
void save_discriminator(const std::filesystem::path& path, const nn::ParamStore& params,
                        const models::DiscriminatorConfig& cfg, std::int64_t step);

struct GeneratorCheckpoint {
  models::GeneratorConfig config;
  nn::ParamStore params;
};

GeneratorCheckpoint load_generator(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sliding-window inference

enum class BlendMode { Constant, Gaussian };

struct SlidingWindowSpec {
  std::int64_t window = 96;  // HR-space tile edge
  double overlap = 0.25;
  BlendMode blend = BlendMode::Gaussian;

  void validate(int scale) const;
};

/// Tile origins along one axis of extent n: multiples of `stride`, with the
/// last tile snapped so that it ends exactly at n.
std::vector<std::int64_t> tile_origins(std::int64_t n, std::int64_t window, std::int64_t stride);
/// LR-space tile stride, at least 1.
std::int64_t tile_stride(std::int64_t lr_window, double overlap);
/// Per-axis blend profile of length `window`: all ones, or a Gaussian with
/// sigma = window / 8 centered on the tile.
std::vector<double> blend_profile(std::int64_t window, BlendMode mode);

struct SlidingWindowResult {
  Volume volume;
  std::vector<double> weight_sum;  // HR-space accumulated blend weight
  std::int64_t tiles = 0;
};

/// Generator over overlapping LR tiles, blended in HR space. A single tile
/// is copied through unblended.
SlidingWindowResult sliding_window_infer_detailed(const Volume& lr, const nn::ParamStore& gen,
                                                  const models::GeneratorConfig& cfg, const SlidingWindowSpec& spec);
Volume sliding_window_infer(const Volume& lr, const nn::ParamStore& gen, const models::GeneratorConfig& cfg,
                            const SlidingWindowSpec& spec);

/// Generator forward on a whole LR volume, no gradients.
Volume generator_infer(const Volume& lr, const nn::ParamStore& gen, const models::GeneratorConfig& cfg);

// ---------------------------------------------------------------------------
// Data

struct PhantomSpec {
  Shape3 shape{64, 64, 64};
  int blobs = 10;
  double texture_amplitude = 0.15;
  int texture_waves = 6;
  int texture_max_frequency = 6;  // cycles per volume edge
};

/// Smoothed random ellipsoids plus band-limited cosine texture, min-max
/// normalized to [0, 1]. Deterministic in `seed`.
Volume make_phantom(const PhantomSpec& spec, std::uint64_t seed);

struct DatasetEntry {
  std::filesystem::path path;
  std::optional<ClipRange> clip;
};

/// Manifest: JSON array of VBIN paths or {"path": ..., "clip": [lo, hi]}
/// objects. Relative paths resolve against the manifest's directory.
std::vector<DatasetEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<DatasetEntry>& entries);
/// Loads each entry, applying its clip range (clip-then-min-max) if present.
std::vector<Volume> load_dataset(const std::vector<DatasetEntry>& entries);

struct Fold {
  std::vector<DatasetEntry> train;
  std::vector<DatasetEntry> test;
};

/// Shuffled k-fold partition; every entry lands in exactly one test split.
std::vector<Fold> kfold_split(const std::vector<DatasetEntry>& entries, int k, std::uint64_t seed);

}  // namespace volsr::pipeline
