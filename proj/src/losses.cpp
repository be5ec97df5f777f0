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

#include "volsr/losses.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "volsr/error.hpp"
#include "volsr/nn/ops.hpp"

namespace volsr::losses {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_same_shape(const nn::Tensor& a, const nn::Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + nn::to_string(a.shape()) + " vs " +
                     nn::to_string(b.shape()));
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {pixel, perceptual, adversarial}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and non-negative");
  }
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = {{"pixel", w.pixel}, {"perceptual", w.perceptual}, {"adversarial", w.adversarial}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  w.pixel = j.value("pixel", w.pixel);
  w.perceptual = j.value("perceptual", w.perceptual);
  w.adversarial = j.value("adversarial", w.adversarial);
}

nn::Tensor pixel_loss(const nn::Tensor& sr, const nn::Tensor& hr) {
  require_same_shape(sr, hr, "pixel_loss");
  return nn::mean_abs_diff(sr, hr);
}

nn::Tensor perceptual_2_5d(const nn::Tensor& sr, const nn::Tensor& hr, const models::FeatureExtractor2D& fx,
                           int slice_stride) {
  require_same_shape(sr, hr, "perceptual_2_5d");
  if (sr.ndim() != 5) throw ShapeError("perceptual_2_5d expects (N,C,D,H,W), got " + nn::to_string(sr.shape()));
  if (slice_stride < 1) throw ConfigError("perceptual_2_5d: slice stride must be >= 1");
  const std::int64_t m = fx.min_extent();
  if (sr.dim(2) < m || sr.dim(3) < m || sr.dim(4) < m) {
    throw ShapeError("perceptual_2_5d: volume " + nn::to_string(sr.shape()) + " has a slice plane below the extractor minimum " +
                     std::to_string(m));
  }
  nn::Tensor total;
  for (Axis axis : kAllAxes) {
    const auto f_sr = fx.extract(nn::view_slices(sr, axis, slice_stride));
    std::vector<nn::Tensor> f_hr;
    {
      nn::NoGradGuard guard;
      f_hr = fx.extract(nn::view_slices(hr.detach(), axis, slice_stride));
    }
    for (std::size_t l = 0; l < f_sr.size(); ++l) {
      const nn::Tensor d = nn::mean_abs_diff(f_sr[l], f_hr[l]);
      total = total.defined() ? nn::add(total, d) : d;
    }
  }
  return total;
}

AdversarialLosses adversarial_losses(const nn::Tensor& d_sr_logits, const nn::Tensor& d_hr_logits) {
  require_same_shape(d_sr_logits, d_hr_logits, "adversarial_losses");
  AdversarialLosses out;
  out.generator = generator_adversarial_loss(d_sr_logits);
  out.discriminator = nn::add(nn::bce_with_logits_mean(d_hr_logits, 1.0), nn::bce_with_logits_mean(d_sr_logits, 0.0));
  return out;
}

nn::Tensor generator_adversarial_loss(const nn::Tensor& d_sr_logits) {
  return nn::bce_with_logits_mean(d_sr_logits, 1.0);
}

nn::Tensor total_generator_loss(const nn::Tensor& pixel, const nn::Tensor& perc, const nn::Tensor& adv,
                                const LossWeights& w) {
  w.validate();
  return nn::add(nn::add(nn::scale(pixel, w.pixel), nn::scale(perc, w.perceptual)), nn::scale(adv, w.adversarial));
}

double total_generator_loss(double pixel, double perc, double adv, const LossWeights& w) {
  w.validate();
  return (w.pixel * pixel + w.perceptual * perc) + w.adversarial * adv;
}

bool LossReport::finite() const {
  return std::isfinite(pixel) && std::isfinite(perceptual) && std::isfinite(adversarial) &&
         std::isfinite(generator_total) && std::isfinite(discriminator);
}

std::string LossReport::describe() const {
  return "step=" + std::to_string(step) + " pixel=" + fmt(pixel) + " perc=" + fmt(perceptual) +
         " adv=" + fmt(adversarial) + " gen_total=" + fmt(generator_total) + " disc=" + fmt(discriminator);
}

void write_log_header(std::ostream& os) { os << "step,pixel,perc,adv,gen_total,disc\n"; }

void write_log_row(std::ostream& os, const LossReport& r) {
  os << r.step << ',' << fmt(r.pixel) << ',' << fmt(r.perceptual) << ',' << fmt(r.adversarial) << ','
     << fmt(r.generator_total) << ',' << fmt(r.discriminator) << '\n';
}

}  // namespace volsr::losses
