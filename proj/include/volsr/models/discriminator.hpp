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

#include <json.hpp>

#include "volsr/models/param_view.hpp"
#include "volsr/nn/param_store.hpp"

namespace volsr::models {

/// Voxel-level 3D U-Net critic. Level l has base_channels * 2^l channels;
/// `depth` average-pool halvings lead to the bottleneck, and the decoder
/// mirrors them with nearest upsampling and skip concatenation. No
/// normalization layers.
struct DiscriminatorConfig {
  int in_channels = 1;
  int base_channels = 16;
  int depth = 3;
  double slope = 0.2;

  void validate() const;
  std::int64_t required_multiple() const { return std::int64_t{1} << depth; }
};

void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

nn::ParamStore init_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

/// (N,C,D,H,W) -> (N,1,D,H,W) real/fake logits, one per voxel.
nn::Tensor discriminator_forward(const nn::Tensor& x, const ParamView& params, const DiscriminatorConfig& cfg);

}  // namespace volsr::models
