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

#include "volsr/nn/tensor.hpp"
#include "volsr/volume.hpp"

namespace volsr::nn {

/// (1,1,D,H,W) tensor holding the volume's values widened to f64.
Tensor to_tensor(const Volume& v, bool requires_grad = false);
/// Narrows a (1,1,D,H,W) tensor back to f32. Non-finite values are rejected.
Volume to_volume(const Tensor& t, Spacing3 spacing = {});

}  // namespace volsr::nn
