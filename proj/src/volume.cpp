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

#include "volsr/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "volsr/error.hpp"

namespace volsr {

static_assert(std::endian::native == std::endian::little, "VBIN I/O assumes a little-endian host");

std::string to_string(const Shape3& s) {
  return std::to_string(s.d) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

std::string_view axis_name(Axis a) {
  switch (a) {
    case Axis::Axial: return "axial";
    case Axis::Coronal: return "coronal";
    case Axis::Sagittal: return "sagittal";
  }
  return "unknown";
}

Volume::Volume(Shape3 shape, std::vector<float> data, Spacing3 spacing, std::optional<ClipRange> clip)
    : shape_(shape), spacing_(spacing), clip_(clip), data_(std::move(data)) {
  if (shape_.d <= 0 || shape_.h <= 0 || shape_.w <= 0) {
    throw ValidationError("volume shape components must be positive");
  }
  if (static_cast<std::int64_t>(data_.size()) != shape_.voxels()) {
    throw ValidationError("volume data length " + std::to_string(data_.size()) + " does not match shape (" +
                          std::to_string(shape_.voxels()) + " voxels)");
  }
  if (!(spacing_.z > 0.0 && spacing_.y > 0.0 && spacing_.x > 0.0) || !std::isfinite(spacing_.z) ||
      !std::isfinite(spacing_.y) || !std::isfinite(spacing_.x)) {
    throw ValidationError("voxel spacing must be finite and strictly positive");
  }
  for (float f : data_) {
    if (!std::isfinite(f)) throw ValidationError("volume contains a non-finite value");
  }
}

Volume Volume::filled(Shape3 shape, float value, Spacing3 spacing) {
  if (shape.d <= 0 || shape.h <= 0 || shape.w <= 0) throw ValidationError("volume shape components must be positive");
  return Volume(shape, std::vector<float>(static_cast<std::size_t>(shape.voxels()), value), spacing);
}

Volume Volume::from_function(Shape3 shape,
                             const std::function<float(std::int64_t, std::int64_t, std::int64_t)>& fn,
                             Spacing3 spacing) {
  if (shape.d <= 0 || shape.h <= 0 || shape.w <= 0) throw ValidationError("volume shape components must be positive");
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(shape.voxels()));
  for (std::int64_t z = 0; z < shape.d; ++z)
    for (std::int64_t y = 0; y < shape.h; ++y)
      for (std::int64_t x = 0; x < shape.w; ++x) data.push_back(fn(z, y, x));
  return Volume(shape, std::move(data), spacing);
}

Volume Volume::with_spacing(Spacing3 spacing) const {
  return Volume(shape_, data_, spacing, clip_);
}

float Volume::min_value() const { return *std::min_element(data_.begin(), data_.end()); }
float Volume::max_value() const { return *std::max_element(data_.begin(), data_.end()); }

double Volume::mean() const {
  double s = 0.0;
  for (float f : data_) s += f;
  return s / static_cast<double>(data_.size());
}

Volume Volume::crop(std::array<std::int64_t, 3> corner, Shape3 extent) const {
  for (int a = 0; a < 3; ++a) {
    if (corner[a] < 0 || extent[a] <= 0 || corner[a] + extent[a] > shape_[a]) {
      throw ShapeError("crop window exceeds volume bounds");
    }
  }
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(extent.voxels()));
  for (std::int64_t z = 0; z < extent.d; ++z)
    for (std::int64_t y = 0; y < extent.h; ++y) {
      const float* row = &data_[static_cast<std::size_t>(((corner[0] + z) * shape_.h + corner[1] + y) * shape_.w + corner[2])];
      out.insert(out.end(), row, row + extent.w);
    }
  return Volume(extent, std::move(out), spacing_, clip_);
}

Volume Volume::pad_to(Shape3 target, float fill) const {
  if (target.d <= 0 || target.h <= 0 || target.w <= 0) throw ShapeError("pad target must be positive");
  std::vector<float> out(static_cast<std::size_t>(target.voxels()), fill);
  const std::int64_t cd = std::min(target.d, shape_.d), ch = std::min(target.h, shape_.h),
                     cw = std::min(target.w, shape_.w);
  for (std::int64_t z = 0; z < cd; ++z)
    for (std::int64_t y = 0; y < ch; ++y)
      std::copy_n(&data_[static_cast<std::size_t>((z * shape_.h + y) * shape_.w)], cw,
                  &out[static_cast<std::size_t>((z * target.h + y) * target.w)]);
  return Volume(target, std::move(out), spacing_, clip_);
}

// ---------------------------------------------------------------------------
// VBIN

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open volume file: " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < kVbinMagic.size() + 4 || !std::equal(kVbinMagic.begin(), kVbinMagic.end(), bytes.begin())) {
    throw MalformedHeaderError("not a VBIN file (bad magic): " + path.string());
  }
  std::uint32_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + kVbinMagic.size(), 4);
  const std::size_t header_begin = kVbinMagic.size() + 4;
  if (bytes.size() < header_begin + header_len) throw MalformedHeaderError("truncated VBIN header: " + path.string());

  Shape3 shape;
  Spacing3 spacing;
  std::optional<ClipRange> clip;
  try {
    auto j = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(header_begin),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(header_begin + header_len));
    const auto& s = j.at("shape");
    const auto& sp = j.at("spacing");
    if (!s.is_array() || s.size() != 3 || !sp.is_array() || sp.size() != 3) {
      throw MalformedHeaderError("VBIN header shape/spacing must be 3-element arrays");
    }
    shape = {s[0].get<std::int64_t>(), s[1].get<std::int64_t>(), s[2].get<std::int64_t>()};
    spacing = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
    if (j.contains("clip") && !j["clip"].is_null()) {
      const auto& c = j["clip"];
      if (!c.is_array() || c.size() != 2) throw MalformedHeaderError("VBIN clip must be null or [lo, hi]");
      clip = ClipRange{c[0].get<double>(), c[1].get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeaderError(std::string("malformed VBIN header: ") + e.what());
  }
  if (shape.d <= 0 || shape.h <= 0 || shape.w <= 0) throw MalformedHeaderError("VBIN header shape must be positive");

  const std::size_t payload = bytes.size() - header_begin - header_len;
  const auto expected = static_cast<std::size_t>(shape.voxels()) * sizeof(float);
  if (payload != expected) {
    throw PayloadLengthError("VBIN payload holds " + std::to_string(payload) + " bytes, header requires " +
                             std::to_string(expected));
  }
  std::vector<float> data(static_cast<std::size_t>(shape.voxels()));
  std::memcpy(data.data(), bytes.data() + header_begin + header_len, expected);
  return Volume(shape, std::move(data), spacing, clip);
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  if (v.size() == 0) throw ValidationError("cannot save an empty volume");
  for (float f : v.data()) {
    if (!std::isfinite(f)) throw ValidationError("volume contains a non-finite value");
  }
  nlohmann::json j;
  j["shape"] = {v.shape().d, v.shape().h, v.shape().w};
  j["spacing"] = {v.spacing().z, v.spacing().y, v.spacing().x};
  if (v.clip()) {
    j["clip"] = {v.clip()->lo, v.clip()->hi};
  } else {
    j["clip"] = nullptr;
  }
  const std::string header = j.dump();
  const auto header_len = static_cast<std::uint32_t>(header.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write volume file: " + path.string());
  out.write(kVbinMagic.data(), kVbinMagic.size());
  out.write(reinterpret_cast<const char*>(&header_len), 4);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(v.data().data()), static_cast<std::streamsize>(v.data().size_bytes()));
  if (!out) throw IoError("failed writing volume file: " + path.string());
}

// ---------------------------------------------------------------------------
// Intensity

Volume normalize(const Volume& v, NormalizeMode mode) {
  std::vector<double> work(v.data().begin(), v.data().end());
  std::optional<ClipRange> clip = v.clip();
  if (mode.kind == NormalizeMode::Kind::ClipMinMax) {
    if (!(mode.lo < mode.hi)) throw ValidationError("clip range requires lo < hi");
    for (double& x : work) x = std::clamp(x, mode.lo, mode.hi);
    clip = ClipRange{mode.lo, mode.hi};
  }
  double lo = 0.0, hi = 0.0;
  if (mode.kind == NormalizeMode::Kind::ClipMinMax) {
    lo = mode.lo;
    hi = mode.hi;
  } else {
    auto [mn, mx] = std::minmax_element(work.begin(), work.end());
    lo = *mn;
    hi = *mx;
  }
  std::vector<float> out(work.size(), 0.0f);
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < work.size(); ++i) {
      out[i] = static_cast<float>(std::clamp((work[i] - lo) * inv, 0.0, 1.0));
    }
  }
  return Volume(v.shape(), std::move(out), v.spacing(), clip);
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

void check_ratio(Ratio r) {
  if (r.num <= 0 || r.den <= 0) throw ValidationError("resampling factor must be a positive rational");
}

Shape3 resampled_shape(const Volume& v, const Factor3& f) {
  Shape3 out{resampled_extent(v.shape().d, f[0]), resampled_extent(v.shape().h, f[1]),
             resampled_extent(v.shape().w, f[2])};
  if (out.d < 1 || out.h < 1 || out.w < 1) throw ShapeError("resampling factor yields an empty axis");
  return out;
}

Spacing3 resampled_spacing(const Volume& v, const Factor3& f) {
  return {v.spacing().z / f[0].value(), v.spacing().y / f[1].value(), v.spacing().x / f[2].value()};
}

// Source index of output voxel i: nearest center to (i + 1/2) / f - 1/2,
// ties to the lower index. Exact integer arithmetic.
std::vector<std::int64_t> nearest_indices(std::int64_t n_in, std::int64_t n_out, Ratio r) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n_out));
  for (std::int64_t i = 0; i < n_out; ++i) {
    const std::int64_t k = ceil_div((2 * i + 1) * r.den - 2 * r.num, 2 * r.num);
    idx[static_cast<std::size_t>(i)] = std::clamp<std::int64_t>(k, 0, n_in - 1);
  }
  return idx;
}

struct LinearTap {
  std::int64_t i0;
  std::int64_t i1;
  double t;
};

std::vector<LinearTap> linear_taps(std::int64_t n_in, std::int64_t n_out, Ratio r) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(n_out));
  const double inv = static_cast<double>(r.den) / static_cast<double>(r.num);
  for (std::int64_t i = 0; i < n_out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * inv - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
    const auto i0 = static_cast<std::int64_t>(std::floor(src));
    const std::int64_t i1 = std::min(i0 + 1, n_in - 1);
    taps[static_cast<std::size_t>(i)] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

std::int64_t resampled_extent(std::int64_t n, Ratio r) {
  check_ratio(r);
  return floor_div(2 * n * r.num + r.den, 2 * r.den);
}

Volume resample_nearest(const Volume& v, const Factor3& factor) {
  for (const auto& r : factor) check_ratio(r);
  const Shape3 out = resampled_shape(v, factor);
  const auto iz = nearest_indices(v.shape().d, out.d, factor[0]);
  const auto iy = nearest_indices(v.shape().h, out.h, factor[1]);
  const auto ix = nearest_indices(v.shape().w, out.w, factor[2]);
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(out.voxels()));
  for (std::int64_t z : iz)
    for (std::int64_t y : iy)
      for (std::int64_t x : ix) data.push_back(v.at(z, y, x));
  return Volume(out, std::move(data), resampled_spacing(v, factor), v.clip());
}

Volume resample_trilinear(const Volume& v, const Factor3& factor) {
  for (const auto& r : factor) check_ratio(r);
  const Shape3 out = resampled_shape(v, factor);
  const auto tz = linear_taps(v.shape().d, out.d, factor[0]);
  const auto ty = linear_taps(v.shape().h, out.h, factor[1]);
  const auto tx = linear_taps(v.shape().w, out.w, factor[2]);
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(out.voxels()));
  for (const auto& z : tz)
    for (const auto& y : ty)
      for (const auto& x : tx) {
        auto lerp_x = [&](std::int64_t zz, std::int64_t yy) {
          const double a = v.at(zz, yy, x.i0), b = v.at(zz, yy, x.i1);
          return a + (b - a) * x.t;
        };
        const double c00 = lerp_x(z.i0, y.i0), c01 = lerp_x(z.i0, y.i1);
        const double c10 = lerp_x(z.i1, y.i0), c11 = lerp_x(z.i1, y.i1);
        const double c0 = c00 + (c01 - c00) * y.t;
        const double c1 = c10 + (c11 - c10) * y.t;
        data.push_back(static_cast<float>(c0 + (c1 - c0) * z.t));
      }
  return Volume(out, std::move(data), resampled_spacing(v, factor), v.clip());
}

}  // namespace volsr
