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

#include "volsr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "volsr/error.hpp"
#include "volsr/nn/ops.hpp"
#include "volsr/nn/volume_bridge.hpp"
#include "volsr/spectral.hpp"

namespace volsr::pipeline {

namespace {

// Seed offsets keep the independent random streams of one run apart.
constexpr std::uint64_t kGenSeed = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kDiscSeed = 0xC2B2AE3D27D4EB4Full;
constexpr std::uint64_t kExtractorSeed = 0x165667B19E3779F9ull;

std::int64_t idx3(Shape3 s, std::int64_t z, std::int64_t y, std::int64_t x) { return (z * s.h + y) * s.w + x; }

// Concatenates (1,C,...) tensors along the batch dimension.
nn::Tensor stack_batch(const std::vector<nn::Tensor>& items) {
  nn::Shape shape = items.front().shape();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(nn::numel(shape)) * items.size());
  for (const auto& t : items) data.insert(data.end(), t.data().begin(), t.data().end());
  shape[0] = static_cast<std::int64_t>(items.size());
  return nn::Tensor::from_data(std::move(shape), std::move(data));
}

std::string step_name(const char* stem, std::int64_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_step%06lld.ckpt", stem, static_cast<long long>(step));
  return buf;
}

const char* pair_source_name(PairSource p) { return p == PairSource::Patch ? "patch" : "volume"; }

}  // namespace

// ---------------------------------------------------------------------------
// Patch sampling

void PatchSpec::validate(std::int64_t multiple) const {
  if (scale < 1) throw ConfigError("patch spec: scale must be >= 1");
  if (hr_patch < 1 || hr_patch % (2 * scale) != 0) {
    throw ConfigError("patch spec: hr_patch " + std::to_string(hr_patch) + " must be divisible by 2*scale = " +
                      std::to_string(2 * scale));
  }
  if (multiple > 1 && hr_patch % multiple != 0) {
    throw ConfigError("patch spec: hr_patch " + std::to_string(hr_patch) + " must be divisible by " +
                      std::to_string(multiple) + " for the discriminator");
  }
}

PatchSampler::PatchSampler(const Volume& volume, const PatchSpec& spec) : volume_(&volume), spec_(spec) {
  const Shape3 s = volume.shape();
  const std::int64_t p = spec.hr_patch;
  if (s.d < p || s.h < p || s.w < p) {
    throw ValidationError("volume " + to_string(s) + " is smaller than the " + std::to_string(p) + "^3 patch");
  }
  grid_ = {s.d - p + 1, s.h - p + 1, s.w - p + 1};
  if (spec.weighting == Weighting::Uniform) return;

  const Volume nv = normalize(volume);
  std::vector<float> sorted(nv.data().begin(), nv.data().end());
  const auto q = static_cast<std::ptrdiff_t>(0.25 * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + q, sorted.end());
  const float threshold = sorted[static_cast<std::size_t>(q)];

  // Summed-area table of the foreground mass, one plane of zero padding.
  const Shape3 t{s.d + 1, s.h + 1, s.w + 1};
  std::vector<double> sat(static_cast<std::size_t>(t.voxels()), 0.0);
  for (std::int64_t z = 0; z < s.d; ++z)
    for (std::int64_t y = 0; y < s.h; ++y)
      for (std::int64_t x = 0; x < s.w; ++x) {
        const float v = nv.at(z, y, x);
        const double m = v > threshold ? v : 0.0;
        sat[idx3(t, z + 1, y + 1, x + 1)] = m + sat[idx3(t, z, y + 1, x + 1)] + sat[idx3(t, z + 1, y, x + 1)] +
                                            sat[idx3(t, z + 1, y + 1, x)] - sat[idx3(t, z, y, x + 1)] -
                                            sat[idx3(t, z, y + 1, x)] - sat[idx3(t, z + 1, y, x)] + sat[idx3(t, z, y, x)];
      }
  auto box = [&](std::int64_t z, std::int64_t y, std::int64_t x) {
    const std::int64_t z1 = z + p, y1 = y + p, x1 = x + p;
    const double v = sat[idx3(t, z1, y1, x1)] - sat[idx3(t, z, y1, x1)] - sat[idx3(t, z1, y, x1)] -
                     sat[idx3(t, z1, y1, x)] + sat[idx3(t, z, y, x1)] + sat[idx3(t, z, y1, x)] +
                     sat[idx3(t, z1, y, x)] - sat[idx3(t, z, y, x)];
    return std::max(v, 0.0);
  };
  cumulative_.resize(static_cast<std::size_t>(grid_.voxels()));
  double acc = 0.0;
  std::size_t i = 0;
  for (std::int64_t z = 0; z < grid_.d; ++z)
    for (std::int64_t y = 0; y < grid_.h; ++y)
      for (std::int64_t x = 0; x < grid_.w; ++x) {
        acc += box(z, y, x);
        cumulative_[i++] = acc;
      }
  if (!(acc > 0.0)) cumulative_.clear();
}

Corner PatchSampler::corner_for(double u) const {
  const auto n = static_cast<std::size_t>(grid_.voxels());
  std::size_t i = 0;
  if (cumulative_.empty()) {
    i = std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
  } else {
    const double target = u * cumulative_.back();
    i = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), target) - cumulative_.begin());
    i = std::min(i, n - 1);
  }
  const auto ii = static_cast<std::int64_t>(i);
  return {ii / (grid_.h * grid_.w), (ii / grid_.w) % grid_.h, ii % grid_.w};
}

double PatchSampler::weight(const Corner& c) const {
  if (cumulative_.empty()) return 1.0;
  const auto i = static_cast<std::size_t>(idx3(grid_, c[0], c[1], c[2]));
  return i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
}

PatchSample PatchSampler::sample(Rng& rng) const {
  PatchSample out;
  out.corner = corner_for(rng.uniform());
  out.patch = volume_->crop(out.corner, {spec_.hr_patch, spec_.hr_patch, spec_.hr_patch});
  return out;
}

PatchSample sample_patch_weighted(const Volume& hr, const PatchSpec& spec, Rng& rng) {
  return PatchSampler(hr, spec).sample(rng);
}

// ---------------------------------------------------------------------------
// Training pairs

TrainingPair make_training_pair(const Volume& hr_patch, int scale) {
  if (!admits_kspace_degrade(hr_patch.shape(), scale)) {
    throw ShapeError("training pair: patch " + to_string(hr_patch.shape()) + " is not divisible by 2*scale = " +
                     std::to_string(2 * scale));
  }
  const Volume lr = kspace_degrade(hr_patch, scale);
  const double lo = hr_patch.min_value();
  const double hi = hr_patch.max_value();
  auto map = [&](const Volume& v) {
    nn::Tensor t = nn::to_tensor(v);
    auto d = t.mutable_data();
    for (double& x : d) x = hi > lo ? (x - lo) / (hi - lo) : 0.0;
    return t;
  };
  return {map(lr), map(hr_patch)};
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train: steps must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (perceptual_slice_stride < 1) throw ConfigError("train: perceptual slice stride must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("train: checkpoint cadence must be >= 0");
  if (checkpoint_every > 0 && !checkpoint_dir) throw ConfigError("train: checkpoint cadence set without a directory");
  for (const auto* o : {&gen_optimizer, &disc_optimizer}) {
    if (!(o->lr > 0.0) || !(o->beta1 >= 0.0 && o->beta1 < 1.0) || !(o->beta2 >= 0.0 && o->beta2 < 1.0) || !(o->eps > 0.0)) {
      throw ConfigError("train: invalid Adam hyperparameters");
    }
  }
  weights.validate();
  generator.validate();
  discriminator.validate();
  extractor.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"steps", c.steps},
       {"batch_size", c.batch_size},
       {"seed", c.seed},
       {"gen_optimizer", c.gen_optimizer},
       {"disc_optimizer", c.disc_optimizer},
       {"weights", c.weights},
       {"generator", c.generator},
       {"discriminator", c.discriminator},
       {"extractor", c.extractor},
       {"extractor_weights", c.extractor_weights ? nlohmann::json(c.extractor_weights->string()) : nlohmann::json()},
       {"perceptual_slice_stride", c.perceptual_slice_stride},
       {"pair_source", pair_source_name(c.pair_source)},
       {"checkpoint_every", c.checkpoint_every},
       {"checkpoint_dir", c.checkpoint_dir ? nlohmann::json(c.checkpoint_dir->string()) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  if (j.contains("gen_optimizer")) c.gen_optimizer = j.at("gen_optimizer").get<nn::AdamConfig>();
  if (j.contains("disc_optimizer")) c.disc_optimizer = j.at("disc_optimizer").get<nn::AdamConfig>();
  if (j.contains("weights")) c.weights = j.at("weights").get<losses::LossWeights>();
  if (j.contains("generator")) c.generator = j.at("generator").get<models::GeneratorConfig>();
  if (j.contains("discriminator")) c.discriminator = j.at("discriminator").get<models::DiscriminatorConfig>();
  if (j.contains("extractor")) c.extractor = j.at("extractor").get<models::FeatureExtractorConfig>();
  if (j.contains("extractor_weights") && j.at("extractor_weights").is_string()) {
    c.extractor_weights = j.at("extractor_weights").get<std::string>();
  }
  c.perceptual_slice_stride = j.value("perceptual_slice_stride", c.perceptual_slice_stride);
  const std::string ps = j.value("pair_source", std::string(pair_source_name(c.pair_source)));
  if (ps != "patch" && ps != "volume") throw ConfigError("train: pair_source must be 'patch' or 'volume'");
  c.pair_source = ps == "patch" ? PairSource::Patch : PairSource::Volume;
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  if (j.contains("checkpoint_dir") && j.at("checkpoint_dir").is_string()) {
    c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
  }
}

void save_generator(const std::filesystem::path& path, const nn::ParamStore& params,
                    const models::GeneratorConfig& cfg, std::int64_t step) {
  nn::save_checkpoint(path, params, {{"kind", "generator"}, {"config", cfg}, {"step", step}});
}

void save_discriminator(const std::filesystem::path& path, const nn::ParamStore& params,
                        const models::DiscriminatorConfig& cfg, std::int64_t step) {
  nn::save_checkpoint(path, params, {{"kind", "discriminator"}, {"config", cfg}, {"step", step}});
}

GeneratorCheckpoint load_generator(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  if (ck.metadata.value("kind", "") != "generator" || !ck.metadata.contains("config")) {
    throw MalformedHeaderError("checkpoint " + path.string() + " is not a generator checkpoint");
  }
  GeneratorCheckpoint out{ck.metadata.at("config").get<models::GeneratorConfig>(), std::move(ck.params)};
  out.config.validate();
  const nn::ParamStore ref = models::init_generator(out.config, 0);
  if (ref.size() != out.params.size()) throw ConfigError("generator checkpoint does not match its config");
  for (const auto& [name, t] : ref.items()) {
    if (!out.params.contains(name) || out.params.at(name).shape() != t.shape()) {
      throw ConfigError("generator checkpoint does not match its config at " + name);
    }
  }
  return out;
}

TrainResult train(const std::vector<Volume>& dataset, const TrainConfig& cfg, const PatchSpec& spec,
                  const StepCallback& on_step) {
  cfg.validate();
  spec.validate(cfg.discriminator.required_multiple());
  if (spec.scale != cfg.generator.upscale) {
    throw ConfigError("train: patch scale " + std::to_string(spec.scale) + " differs from generator upscale " +
                      std::to_string(cfg.generator.upscale));
  }
  if (spec.lr_patch() < models::GeneratorConfig::kMinInputExtent) throw ConfigError("train: LR patch is below the generator minimum");
  if (dataset.empty()) throw ValidationError("train: empty dataset");

  const models::FeatureExtractor2D fx = cfg.extractor_weights
                                            ? models::FeatureExtractor2D::load(*cfg.extractor_weights)
                                            : models::FeatureExtractor2D::random(cfg.extractor, cfg.seed ^ kExtractorSeed);
  if (spec.hr_patch < fx.min_extent()) throw ConfigError("train: HR patch is below the feature extractor minimum");

  // Pair sources. In Volume mode the samplers run over padded HR volumes and
  // the LR volumes are degraded once up front.
  std::vector<Volume> hr_volumes;
  std::vector<Volume> lr_volumes;
  if (cfg.pair_source == PairSource::Volume) {
    for (const auto& v : dataset) {
      hr_volumes.push_back(v.pad_to(kspace_padded_shape(v.shape(), spec.scale)));
      lr_volumes.push_back(kspace_degrade(hr_volumes.back(), spec.scale));
    }
  }
  const std::vector<Volume>& source = cfg.pair_source == PairSource::Volume ? hr_volumes : dataset;
  std::vector<PatchSampler> samplers;
  samplers.reserve(source.size());
  for (const auto& v : source) samplers.emplace_back(v, spec);

  TrainResult result;
  result.generator = models::init_generator(cfg.generator, cfg.seed ^ kGenSeed);
  result.discriminator = models::init_discriminator(cfg.discriminator, cfg.seed ^ kDiscSeed);
  nn::AdamState gen_state(cfg.gen_optimizer);
  nn::AdamState disc_state(cfg.disc_optimizer);
  Rng rng(cfg.seed);

  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    std::vector<nn::Tensor> lr_items, hr_items;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t vi = rng.below(source.size());
      PatchSample ps = samplers[vi].sample(rng);
      if (cfg.pair_source == PairSource::Patch) {
        TrainingPair pair = make_training_pair(ps.patch, spec.scale);
        lr_items.push_back(std::move(pair.lr));
        hr_items.push_back(std::move(pair.hr));
      } else {
        // Align the corner to the LR grid.
        Corner c = ps.corner;
        for (auto& v : c) v -= v % spec.scale;
        const std::int64_t p = spec.hr_patch, lp = spec.lr_patch();
        hr_items.push_back(nn::to_tensor(source[vi].crop(c, {p, p, p})));
        lr_items.push_back(nn::to_tensor(lr_volumes[vi].crop({c[0] / spec.scale, c[1] / spec.scale, c[2] / spec.scale}, {lp, lp, lp})));
      }
    }
    const nn::Tensor lr = stack_batch(lr_items);
    const nn::Tensor hr = stack_batch(hr_items);

    const nn::Tensor sr = models::generator_forward(lr, result.generator, cfg.generator);

    // Discriminator update on the detached SR batch.
    losses::LossReport report;
    report.step = step;
    {
      const nn::Tensor d_hr = models::discriminator_forward(hr, result.discriminator, cfg.discriminator);
      const nn::Tensor d_sr = models::discriminator_forward(sr.detach(), result.discriminator, cfg.discriminator);
      const nn::Tensor disc = losses::adversarial_losses(d_sr, d_hr).discriminator;
      report.discriminator = disc.item();
      nn::backward(disc);
      nn::adam_step(result.discriminator, disc_state);
    }

    // Generator update through the frozen, freshly updated critic.
    {
      const nn::ParamStore critic = result.discriminator.clone(/*frozen=*/true);
      const nn::Tensor pix = losses::pixel_loss(sr, hr);
      const nn::Tensor perc = losses::perceptual_2_5d(sr, hr, fx, cfg.perceptual_slice_stride);
      const nn::Tensor adv =
          losses::generator_adversarial_loss(models::discriminator_forward(sr, critic, cfg.discriminator));
      const nn::Tensor total = losses::total_generator_loss(pix, perc, adv, cfg.weights);
      report.pixel = pix.item();
      report.perceptual = perc.item();
      report.adversarial = adv.item();
      report.generator_total = total.item();
      if (!report.finite()) {
        throw NumericError("non-finite loss: " + report.describe() + " gen_param_norm=" +
                           std::to_string(result.generator.norm()) + " disc_param_norm=" +
                           std::to_string(result.discriminator.norm()));
      }
      nn::backward(total);
      nn::adam_step(result.generator, gen_state);
    }

    result.log.push_back(report);
    if (on_step) on_step(report);
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
      std::filesystem::create_directories(*cfg.checkpoint_dir);
      save_generator(*cfg.checkpoint_dir / step_name("gen", step), result.generator, cfg.generator, step);
      save_discriminator(*cfg.checkpoint_dir / step_name("disc", step), result.discriminator, cfg.discriminator, step);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sliding-window inference

void SlidingWindowSpec::validate(int scale) const {
  if (scale < 1) throw ConfigError("sliding window: scale must be >= 1");
  if (window < 1 || window % scale != 0) {
    throw ConfigError("sliding window: window " + std::to_string(window) + " must be a positive multiple of the scale " +
                      std::to_string(scale));
  }
  if (window / scale < models::GeneratorConfig::kMinInputExtent) {
    throw ConfigError("sliding window: LR window " + std::to_string(window / scale) + " is below the generator minimum");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("sliding window: overlap must be in [0, 1)");
}

std::int64_t tile_stride(std::int64_t lr_window, double overlap) {
  const double s = std::floor(static_cast<double>(lr_window) * (1.0 - overlap) + 1e-9);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(s));
}

std::vector<std::int64_t> tile_origins(std::int64_t n, std::int64_t window, std::int64_t stride) {
  if (window < 1 || stride < 1) throw ConfigError("tile_origins: window and stride must be >= 1");
  if (n < window) {
    throw ShapeError("tile_origins: extent " + std::to_string(n) + " is smaller than the window " + std::to_string(window));
  }
  std::vector<std::int64_t> out;
  for (std::int64_t o = 0; o + window < n; o += stride) out.push_back(o);
  out.push_back(n - window);
  return out;
}

std::vector<double> blend_profile(std::int64_t window, BlendMode mode) {
  std::vector<double> p(static_cast<std::size_t>(window), 1.0);
  if (mode == BlendMode::Gaussian) {
    const double sigma = static_cast<double>(window) / 8.0;
    const double c = 0.5 * static_cast<double>(window - 1);
    for (std::int64_t i = 0; i < window; ++i) {
      const double d = static_cast<double>(i) - c;
      p[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
  }
  return p;
}

Volume generator_infer(const Volume& lr, const nn::ParamStore& gen, const models::GeneratorConfig& cfg) {
  nn::NoGradGuard guard;
  const nn::Tensor out = models::generator_forward(nn::to_tensor(lr), gen, cfg);
  const Spacing3 sp = lr.spacing();
  const double f = cfg.upscale;
  return nn::to_volume(out, {sp.z / f, sp.y / f, sp.x / f});
}

SlidingWindowResult sliding_window_infer_detailed(const Volume& lr, const nn::ParamStore& gen,
                                                  const models::GeneratorConfig& cfg, const SlidingWindowSpec& spec) {
  cfg.validate();
  spec.validate(cfg.upscale);
  const int s = cfg.upscale;
  const std::int64_t lw = spec.window / s;
  const Shape3 ls = lr.shape();
  if (ls.d < lw || ls.h < lw || ls.w < lw) {
    throw ShapeError("sliding window: LR volume " + to_string(ls) + " is smaller than the LR window " + std::to_string(lw));
  }
  const std::int64_t stride = tile_stride(lw, spec.overlap);
  const auto oz = tile_origins(ls.d, lw, stride);
  const auto oy = tile_origins(ls.h, lw, stride);
  const auto ox = tile_origins(ls.w, lw, stride);
  const Shape3 hs{ls.d * s, ls.h * s, ls.w * s};

  SlidingWindowResult result;
  result.tiles = static_cast<std::int64_t>(oz.size() * oy.size() * ox.size());
  if (result.tiles == 1) {
    result.volume = generator_infer(lr, gen, cfg);
    result.weight_sum.assign(static_cast<std::size_t>(hs.voxels()), 1.0);
    return result;
  }

  const auto prof = blend_profile(spec.window, spec.blend);
  const std::int64_t W = spec.window;
  std::vector<double> acc(static_cast<std::size_t>(hs.voxels()), 0.0);
  result.weight_sum.assign(acc.size(), 0.0);
  for (std::int64_t z0 : oz)
    for (std::int64_t y0 : oy)
      for (std::int64_t x0 : ox) {
        const Volume tile = generator_infer(lr.crop({z0, y0, x0}, {lw, lw, lw}), gen, cfg);
        for (std::int64_t z = 0; z < W; ++z)
          for (std::int64_t y = 0; y < W; ++y) {
            const double wzy = prof[static_cast<std::size_t>(z)] * prof[static_cast<std::size_t>(y)];
            const std::int64_t row = idx3(hs, z0 * s + z, y0 * s + y, x0 * s);
            for (std::int64_t x = 0; x < W; ++x) {
              const double w = wzy * prof[static_cast<std::size_t>(x)];
              acc[static_cast<std::size_t>(row + x)] += w * tile.at(z, y, x);
              result.weight_sum[static_cast<std::size_t>(row + x)] += w;
            }
          }
      }
  std::vector<float> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (!(result.weight_sum[i] > 0.0)) throw NumericError("sliding window: uncovered voxel at flat index " + std::to_string(i));
    out[i] = static_cast<float>(acc[i] / result.weight_sum[i]);
  }
  const Spacing3 sp = lr.spacing();
  result.volume = Volume(hs, std::move(out), {sp.z / s, sp.y / s, sp.x / s});
  return result;
}

Volume sliding_window_infer(const Volume& lr, const nn::ParamStore& gen, const models::GeneratorConfig& cfg,
                            const SlidingWindowSpec& spec) {
  return sliding_window_infer_detailed(lr, gen, cfg, spec).volume;
}

// ---------------------------------------------------------------------------
// Data

Volume make_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  const Shape3 s = spec.shape;
  if (s.d < 1 || s.h < 1 || s.w < 1) throw ConfigError("phantom: shape must be positive");
  if (spec.blobs < 0 || spec.texture_waves < 0 || spec.texture_max_frequency < 0) {
    throw ConfigError("phantom: counts must be non-negative");
  }
  Rng rng(seed);
  struct Blob {
    double c[3], r[3], amp;
  };
  std::vector<Blob> blobs(static_cast<std::size_t>(spec.blobs));
  for (auto& b : blobs) {
    for (int a = 0; a < 3; ++a) {
      const double n = static_cast<double>(s[a]);
      b.c[a] = rng.uniform(0.15, 0.85) * n;
      b.r[a] = rng.uniform(0.08, 0.25) * n;
    }
    b.amp = rng.uniform(0.3, 1.0);
  }
  struct Wave {
    int f[3];
    double phase, amp;
  };
  std::vector<Wave> waves;
  const int fmax = spec.texture_max_frequency;
  for (int i = 0; i < spec.texture_waves && fmax > 0; ++i) {
    Wave w{};
    do {
      for (int& f : w.f) f = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * fmax + 1))) - fmax;
    } while (w.f[0] == 0 && w.f[1] == 0 && w.f[2] == 0);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.amp = spec.texture_amplitude * rng.uniform(0.5, 1.0) / std::sqrt(static_cast<double>(spec.texture_waves));
    waves.push_back(w);
  }
  constexpr double kEdge = 8.0;  // logistic edge steepness in units of radius
  std::vector<float> data(static_cast<std::size_t>(s.voxels()));
  std::size_t i = 0;
  for (std::int64_t z = 0; z < s.d; ++z)
    for (std::int64_t y = 0; y < s.h; ++y)
      for (std::int64_t x = 0; x < s.w; ++x) {
        const double p[3] = {static_cast<double>(z), static_cast<double>(y), static_cast<double>(x)};
        double v = 0.0;
        for (const auto& b : blobs) {
          double r2 = 0.0;
          for (int a = 0; a < 3; ++a) r2 += ((p[a] - b.c[a]) / b.r[a]) * ((p[a] - b.c[a]) / b.r[a]);
          v += b.amp / (1.0 + std::exp(kEdge * (std::sqrt(r2) - 1.0)));
        }
        for (const auto& w : waves) {
          double ph = w.phase;
          for (int a = 0; a < 3; ++a) ph += 2.0 * std::numbers::pi * w.f[a] * p[a] / static_cast<double>(s[a]);
          v += w.amp * std::cos(ph);
        }
        data[i++] = static_cast<float>(v);
      }
  return normalize(Volume(s, std::move(data)));
}

std::vector<DatasetEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("manifest not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeaderError("malformed manifest " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw MalformedHeaderError("malformed manifest " + path.string() + ": expected a JSON array");
  const std::filesystem::path base = path.parent_path();
  std::vector<DatasetEntry> out;
  for (const auto& e : j) {
    DatasetEntry d;
    if (e.is_string()) {
      d.path = e.get<std::string>();
    } else if (e.is_object() && e.contains("path") && e.at("path").is_string()) {
      d.path = e.at("path").get<std::string>();
      if (e.contains("clip") && !e.at("clip").is_null()) {
        const auto& c = e.at("clip");
        if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
          throw MalformedHeaderError("malformed manifest " + path.string() + ": clip must be [lo, hi]");
        }
        d.clip = ClipRange{c[0].get<double>(), c[1].get<double>()};
      }
    } else {
      throw MalformedHeaderError("malformed manifest " + path.string() + ": entries must be paths or {path, clip}");
    }
    if (d.path.is_relative()) d.path = base / d.path;
    out.push_back(std::move(d));
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const std::vector<DatasetEntry>& entries) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    if (e.clip) {
      j.push_back({{"path", e.path.string()}, {"clip", {e.clip->lo, e.clip->hi}}});
    } else {
      j.push_back(e.path.string());
    }
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<Volume> load_dataset(const std::vector<DatasetEntry>& entries) {
  std::vector<Volume> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    const Volume v = load_volume(e.path);
    out.push_back(e.clip ? normalize(v, NormalizeMode::clip(e.clip->lo, e.clip->hi)) : normalize(v));
  }
  return out;
}

std::vector<Fold> kfold_split(const std::vector<DatasetEntry>& entries, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold: k must be >= 2");
  if (entries.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("kfold: " + std::to_string(entries.size()) + " entries cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::size_t> fold_of(entries.size());
  for (std::size_t p = 0; p < order.size(); ++p) fold_of[order[p]] = p % static_cast<std::size_t>(k);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t f = 0; f < folds.size(); ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(entries[i]);
  return folds;
}

}  // namespace volsr::pipeline
