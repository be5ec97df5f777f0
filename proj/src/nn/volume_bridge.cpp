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

#include "volsr/nn/volume_bridge.hpp"

#include <cmath>

#include "volsr/error.hpp"

namespace volsr::nn {

Tensor to_tensor(const Volume& v, bool requires_grad) {
  const Shape3& s = v.shape();
  return Tensor::from_data({1, 1, s.d, s.h, s.w}, {v.data().begin(), v.data().end()}, requires_grad);
}

Volume to_volume(const Tensor& t, Spacing3 spacing) {
  if (t.ndim() != 5 || t.dim(0) != 1 || t.dim(1) != 1) {
    throw ShapeError("to_volume expects (1,1,D,H,W), got " + to_string(t.shape()));
  }
  std::vector<float> data(t.data().size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(t.data()[i])) throw NumericError("to_volume: non-finite value at flat index " + std::to_string(i));
    data[i] = static_cast<float>(t.data()[i]);
  }
  return Volume(Shape3{t.dim(2), t.dim(3), t.dim(4)}, std::move(data), spacing);
}

}  // namespace volsr::nn
