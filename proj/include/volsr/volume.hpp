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
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <string>
#include <vector>

namespace volsr {

struct Shape3 {
  std::int64_t d = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  std::int64_t voxels() const { return d * h * w; }
  std::int64_t operator[](int axis) const { return axis == 0 ? d : (axis == 1 ? h : w); }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// "DxHxW".
std::string to_string(const Shape3& s);

/// Voxel edge lengths along (z, y, x).
struct Spacing3 {
  double z = 1.0;
  double y = 1.0;
  double x = 1.0;

  double operator[](int axis) const { return axis == 0 ? z : (axis == 1 ? y : x); }
  friend bool operator==(const Spacing3&, const Spacing3&) = default;
};

struct ClipRange {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const ClipRange&, const ClipRange&) = default;
};

/// Anatomical viewing planes. Each view slices along one array axis:
/// Axial -> z (axis 0), Coronal -> y (axis 1), Sagittal -> x (axis 2).
enum class Axis { Axial = 0, Coronal = 1, Sagittal = 2 };

inline constexpr std::array<Axis, 3> kAllAxes = {Axis::Axial, Axis::Coronal, Axis::Sagittal};

constexpr int array_axis(Axis a) { return static_cast<int>(a); }
std::string_view axis_name(Axis a);

/// Dense (z, y, x) grid of 32-bit floats, x fastest. Immutable once built;
/// every constructor validates shape, spacing and finiteness.
class Volume {
 public:
  Volume() = default;
  Volume(Shape3 shape, std::vector<float> data, Spacing3 spacing = {},
         std::optional<ClipRange> clip = std::nullopt);

  static Volume filled(Shape3 shape, float value, Spacing3 spacing = {});
  static Volume from_function(Shape3 shape,
                              const std::function<float(std::int64_t, std::int64_t, std::int64_t)>& fn,
                              Spacing3 spacing = {});

  const Shape3& shape() const { return shape_; }
  const Spacing3& spacing() const { return spacing_; }
  const std::optional<ClipRange>& clip() const { return clip_; }
  std::span<const float> data() const { return data_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  float at(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return data_[static_cast<std::size_t>((z * shape_.h + y) * shape_.w + x)];
  }

  /// Copy of this volume with different metadata; data untouched.
  Volume with_spacing(Spacing3 spacing) const;

  float min_value() const;
  float max_value() const;
  double mean() const;

  /// Sub-block starting at `corner` with extent `extent`.
  Volume crop(std::array<std::int64_t, 3> corner, Shape3 extent) const;
  /// Zero-extends (or crops) to `target`, anchored at the origin.
  Volume pad_to(Shape3 target, float fill = 0.0f) const;

 private:
  Shape3 shape_{};
  Spacing3 spacing_{};
  std::optional<ClipRange> clip_;
  std::vector<float> data_;
};

// VBIN container: "VSRVBIN\0", u32 LE header length, JSON header,
// then D*H*W little-endian f32 in z-major order.
inline constexpr std::array<char, 8> kVbinMagic = {'V', 'S', 'R', 'V', 'B', 'I', 'N', '\0'};

Volume load_volume(const std::filesystem::path& path);
void save_volume(const Volume& v, const std::filesystem::path& path);

struct NormalizeMode {
  enum class Kind { MinMax, ClipMinMax };
  Kind kind = Kind::MinMax;
  double lo = 0.0;
  double hi = 0.0;

  static NormalizeMode min_max() { return {}; }
  static NormalizeMode clip(double lo, double hi) { return {Kind::ClipMinMax, lo, hi}; }
};

/// Maps intensities to [0, 1]. A constant volume maps to all zeros.
Volume normalize(const Volume& v, NormalizeMode mode = NormalizeMode::min_max());

/// Positive rational resampling factor for one axis.
struct Ratio {
  std::int64_t num = 1;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

using Factor3 = std::array<Ratio, 3>;

inline Factor3 uniform_factor(Ratio r) { return {r, r, r}; }

/// Output extent round(n * factor), half rounded up.
std::int64_t resampled_extent(std::int64_t n, Ratio r);

/// Nearest-voxel-center resampling; exact ties go to the lower source index.
Volume resample_nearest(const Volume& v, const Factor3& factor);
/// Trilinear resampling with half-voxel-centered coordinates and edge clamping.
Volume resample_trilinear(const Volume& v, const Factor3& factor);

}  // namespace volsr
