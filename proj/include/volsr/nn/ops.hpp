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

#include <vector>

#include "volsr/nn/tensor.hpp"
#include "volsr/volume.hpp"

namespace volsr::nn {

// Elementwise / arithmetic
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// a + s * b, the residual-scaling pattern.
Tensor add_scaled(const Tensor& a, const Tensor& b, double s);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);

// Convolution. Cross-correlation, no kernel flip. Kernel extents must be odd.
/// x (N,Cin,D,H,W), w (Cout,Cin,kd,kh,kw), b (Cout) or undefined.
Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, int stride = 1, int padding = 0);
/// x (N,Cin,H,W), w (Cout,Cin,kh,kw), b (Cout) or undefined.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride = 1, int padding = 0);

// Resampling / pooling
/// Replicates each voxel factor^3 times; the gradient sums over replicas.
Tensor upsample_nearest3d(const Tensor& x, int factor);
/// Non-overlapping k^3 average pooling; spatial dims must be divisible by k.
Tensor avg_pool3d(const Tensor& x, int k);
/// Non-overlapping k^2 max pooling (floor mode). Ties route to the first max.
Tensor max_pool2d(const Tensor& x, int k);

// Layout
/// Concatenation along dim 1; all other dims must agree.
Tensor concat_channels(const std::vector<Tensor>& xs);
Tensor reshape(const Tensor& x, Shape shape);
/// Reinterprets (N,C,D,H,W) as a batch of 2D images cut along `axis`,
/// keeping every `stride`-th slice: Axial -> (N*Ls,C,H,W),
/// Coronal -> (N*Ls,C,D,W), Sagittal -> (N*Ls,C,D,H). Sample-major order.
Tensor view_slices(const Tensor& x, Axis axis, int stride = 1);

// Losses
/// mean |a - b|; sign(0) is taken as 0.
Tensor mean_abs_diff(const Tensor& a, const Tensor& b);
/// Mean voxel-wise binary cross-entropy of logits against a constant label.
Tensor bce_with_logits_mean(const Tensor& logits, double label);

}  // namespace volsr::nn
