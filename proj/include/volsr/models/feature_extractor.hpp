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

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "volsr/nn/param_store.hpp"

namespace volsr::models {

/// One conv3x3 (padding 1) + LeakyReLU block of the 2D extractor.
struct FeatureLayerSpec {
  int out_channels = 8;
  bool tap = false;         // emit the activation as a feature map
  bool pool_after = false;  // 2x2 max-pool after the (tapped) activation
};

struct FeatureExtractorConfig {
  int in_channels = 1;
  double slope = 0.2;
  std::vector<FeatureLayerSpec> layers;

  /// 8 -> 16 -> 32 -> 32, pooled after blocks 2 and 3, tapped after 2 and 4.
  static FeatureExtractorConfig standard();
  void validate() const;
  /// Smallest H and W that keep every block at >= 1 pixel.
  std::int64_t min_extent() const;
  int num_taps() const;
};

void to_json(nlohmann::json& j, const FeatureExtractorConfig& c);
void from_json(const nlohmann::json& j, FeatureExtractorConfig& c);

/// Frozen 2D slice encoder standing in for a pretrained perceptual network.
/// Its weights never require gradients, but gradients flow through it to
/// the input slices. Weights live in the nn checkpoint format with
/// parameter names "block{i}.w" / "block{i}.b".
class FeatureExtractor2D {
 public:
  FeatureExtractor2D(FeatureExtractorConfig cfg, const nn::ParamStore& weights);

  /// Fan-in normal random weights, deterministic in `seed`.
  static FeatureExtractor2D random(const FeatureExtractorConfig& cfg, std::uint64_t seed);
  static FeatureExtractor2D load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// (N,C,H,W) slices -> one tensor per tapped block, in block order.
  std::vector<nn::Tensor> extract(const nn::Tensor& slices) const;

  const FeatureExtractorConfig& config() const { return cfg_; }
  const nn::ParamStore& weights() const { return weights_; }
  std::int64_t min_extent() const { return cfg_.min_extent(); }

 private:
  FeatureExtractorConfig cfg_;
  nn::ParamStore weights_;
};

}  // namespace volsr::models
