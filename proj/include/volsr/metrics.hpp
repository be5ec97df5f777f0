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

#include <iosfwd>
#include <optional>
#include <string>

#include "volsr/models/feature_extractor.hpp"
#include "volsr/volume.hpp"

namespace volsr::metrics {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Volumetric SSIM: Gaussian-weighted local statistics over every window
/// position that fits inside the volume (valid padding), averaged.
double ssim3d(const Volume& a, const Volume& b, double data_range, const SsimParams& p = {});

/// 10 log10(range^2 / MSE) in dB; +inf when the inputs are identical.
double psnr(const Volume& a, const Volume& b, double data_range);

/// 2.5D feature-space distance under the given extractor, without
/// gradients. A stand-in only: it is not LPIPS and not FID.
double feature_distance(const Volume& a, const Volume& b, const models::FeatureExtractor2D& fx);

/// max - min of the reference, or 1 for a constant reference.
double default_data_range(const Volume& reference);

struct MetricsReport {
  double ssim = 0.0;
  double psnr = 0.0;
  std::optional<double> feature_distance;
  double data_range = 1.0;

  static constexpr const char* kFeatureDistanceLabel = "feature_distance (2.5D extractor L1; not LPIPS/FID)";
};

MetricsReport evaluate(const Volume& estimate, const Volume& reference, double data_range,
                       const models::FeatureExtractor2D* fx = nullptr);

/// Evaluation report: "volume_id,method,ssim,psnr,feature_distance,data_range".
/// An infinite PSNR prints as "inf"; a missing feature distance as "".
void write_report_header(std::ostream& os);
void write_report_row(std::ostream& os, const std::string& volume_id, const std::string& method,
                      const MetricsReport& r);

}  // namespace volsr::metrics
