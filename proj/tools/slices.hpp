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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "volsr/volume.hpp"

namespace volsr::cli {

/// Row-major 2D image cut from a volume. Axial slices have rows = y and
/// columns = x, coronal rows = z and columns = x, sagittal rows = z and
/// columns = y.
struct SliceImage {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<float> values;
};

SliceImage extract_slice(const Volume& v, Axis axis, std::int64_t index);

/// Linear map of [lo, hi] onto 0..255 after clamping. When lo == hi every
/// pixel becomes mid gray.
std::vector<std::uint8_t> to_gray8(const std::vector<float>& values, double lo, double hi);

/// Nearest-neighbor enlargement by an integer factor.
SliceImage enlarge(const SliceImage& img, int factor);

void write_gray_png(const std::filesystem::path& path, std::int64_t rows, std::int64_t cols,
                    const std::vector<std::uint8_t>& pixels);

}  // namespace volsr::cli
