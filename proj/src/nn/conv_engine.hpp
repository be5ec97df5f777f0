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

namespace volsr::nn::engine {

/// Geometry of one (possibly 2D-as-3D) convolution.
struct ConvGeom {
  std::int64_t n = 1, cin = 1, d = 1, h = 1, w = 1;
  std::int64_t cout = 1, kd = 1, kh = 1, kw = 1;
  std::int64_t stride = 1;
  std::int64_t pd = 0, ph = 0, pw = 0;
  std::int64_t od = 1, oh = 1, ow = 1;

  std::int64_t in_spatial() const { return d * h * w; }
  std::int64_t out_spatial() const { return od * oh * ow; }
  std::int64_t patch() const { return cin * kd * kh * kw; }
};

/// y = conv(x, w) + b (b may be null); with accumulate, y += conv(x, w).
void conv_forward(const ConvGeom& g, const double* x, const double* w, const double* b, double* y,
                  bool accumulate = false);
/// gx += d conv / d x applied to gy.
void conv_backward_input(const ConvGeom& g, const double* w, const double* gy, double* gx);
/// gw += d conv / d w applied to gy; gb (nullable) += per-channel sums of gy.
void conv_backward_weight(const ConvGeom& g, const double* x, const double* gy, double* gw, double* gb);

}  // namespace volsr::nn::engine
