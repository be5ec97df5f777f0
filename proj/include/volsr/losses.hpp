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
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "volsr/models/feature_extractor.hpp"
#include "volsr/nn/tensor.hpp"

namespace volsr::losses {

/// Generator objective weights: pixel, perceptual, adversarial.
struct LossWeights {
  double pixel = 1.0;
  double perceptual = 1.0;
  double adversarial = 0.01;

  void validate() const;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

/// Mean absolute error over all elements.
nn::Tensor pixel_loss(const nn::Tensor& sr, const nn::Tensor& hr);

/// Sum over the axial, coronal and sagittal views of the per-layer mean
/// absolute feature difference, taken over every `slice_stride`-th slice.
/// sr and hr are (N,1,D,H,W); gradients flow to sr only.
nn::Tensor perceptual_2_5d(const nn::Tensor& sr, const nn::Tensor& hr, const models::FeatureExtractor2D& fx,
                           int slice_stride = 1);

struct AdversarialLosses {
  nn::Tensor generator;      // mean BCE(d_sr, 1)
  nn::Tensor discriminator;  // mean BCE(d_hr, 1) + mean BCE(d_sr, 0)
};

/// Voxel-wise BCE-with-logits terms. Which network receives gradients is
/// decided by the caller: score a detached SR volume for the discriminator
/// term and score through frozen critic weights for the generator term.
AdversarialLosses adversarial_losses(const nn::Tensor& d_sr_logits, const nn::Tensor& d_hr_logits);

/// The generator term alone, mean BCE(d_sr, 1).
nn::Tensor generator_adversarial_loss(const nn::Tensor& d_sr_logits);

nn::Tensor total_generator_loss(const nn::Tensor& pixel, const nn::Tensor& perc, const nn::Tensor& adv,
                                const LossWeights& w);
double total_generator_loss(double pixel, double perc, double adv, const LossWeights& w);

struct LossReport {
  std::int64_t step = 0;
  double pixel = 0.0;
  double perceptual = 0.0;
  double adversarial = 0.0;
  double generator_total = 0.0;
  double discriminator = 0.0;

  bool finite() const;
  std::string describe() const;
};

/// Training log: header "step,pixel,perc,adv,gen_total,disc", one row per
/// step with values printed round-trip exact.
void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, const LossReport& r);

}  // namespace volsr::losses
