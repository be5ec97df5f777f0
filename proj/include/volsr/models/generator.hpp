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
#include "volsr/rng.hpp"

namespace volsr::models {

/// 3D RRDB-Net hyperparameters. The defaults are the desk-scale setting;
/// nf=64, gc=32, num_blocks=23 is the full-scale ESRGAN setting.
struct GeneratorConfig {
  int in_channels = 1;
  int nf = 16;              // trunk channels
  int gc = 8;               // growth channels inside a dense block
  int num_blocks = 4;       // RRDBs in the trunk
  int rdb_per_rrdb = 3;     // fixed
  int convs_per_rdb = 5;    // fixed
  double residual_scale = 0.2;
  int upscale = 4;
  double slope = 0.2;       // LeakyReLU negative slope

  void validate() const;
  int upsample_stages() const;
  /// Smallest admissible LR extent per axis.
  static constexpr std::int64_t kMinInputExtent = 4;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// Fan-in normal init (std sqrt(2/fan_in)), scaled by 0.1 on convs inside
/// dense blocks and on the output conv, zero biases. Deterministic in `seed`.
nn::ParamStore init_generator(const GeneratorConfig& cfg, std::uint64_t seed);

/// Registers the five convs of one dense block under `prefix`.
void add_rdb_params(nn::ParamStore& store, const std::string& prefix, const GeneratorConfig& cfg, Rng& rng,
                    double gain = 0.1);

/// Residual dense block: conv i sees concat(x, out_0..out_{i-1}); the last
/// conv maps back to nf channels and the result is x + beta * out.
nn::Tensor rdb_forward(const nn::Tensor& x, const ParamView& params, const GeneratorConfig& cfg);
/// Three chained dense blocks under an outer residual:
/// x + beta * (chain(x) - x).
nn::Tensor rrdb_forward(const nn::Tensor& x, const ParamView& params, const GeneratorConfig& cfg);
/// (N,1,d,h,w) -> (N,1,4d,4h,4w).
nn::Tensor generator_forward(const nn::Tensor& lr, const ParamView& params, const GeneratorConfig& cfg);

}  // namespace volsr::models
