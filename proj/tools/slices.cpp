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

#include "slices.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "volsr/error.hpp"

namespace volsr::cli {

SliceImage extract_slice(const Volume& v, Axis axis, std::int64_t index) {
  const Shape3 s = v.shape();
  const std::int64_t n = s[array_axis(axis)];
  if (index < 0 || index >= n) {
    throw ValidationError(std::string(axis_name(axis)) + " slice index " + std::to_string(index) + " outside [0, " +
                          std::to_string(n) + ")");
  }
  SliceImage img;
  switch (axis) {
    case Axis::Axial:
      img.rows = s.h;
      img.cols = s.w;
      break;
    case Axis::Coronal:
      img.rows = s.d;
      img.cols = s.w;
      break;
    case Axis::Sagittal:
      img.rows = s.d;
      img.cols = s.h;
      break;
  }
  img.values.resize(static_cast<std::size_t>(img.rows * img.cols));
  std::size_t i = 0;
  for (std::int64_t r = 0; r < img.rows; ++r)
    for (std::int64_t c = 0; c < img.cols; ++c) {
      switch (axis) {
        case Axis::Axial:
          img.values[i++] = v.at(index, r, c);
          break;
        case Axis::Coronal:
          img.values[i++] = v.at(r, index, c);
          break;
        case Axis::Sagittal:
          img.values[i++] = v.at(r, c, index);
          break;
      }
    }
  return img;
}

std::vector<std::uint8_t> to_gray8(const std::vector<float>& values, double lo, double hi) {
  std::vector<std::uint8_t> out(values.size(), 128);
  if (!(hi > lo)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = std::clamp((static_cast<double>(values[i]) - lo) / (hi - lo), 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(t * 255.0));
  }
  return out;
}

SliceImage enlarge(const SliceImage& img, int factor) {
  if (factor < 1) throw ConfigError("zoom factor must be >= 1");
  SliceImage out{img.rows * factor, img.cols * factor, {}};
  out.values.resize(static_cast<std::size_t>(out.rows * out.cols));
  for (std::int64_t r = 0; r < out.rows; ++r)
    for (std::int64_t c = 0; c < out.cols; ++c)
      out.values[static_cast<std::size_t>(r * out.cols + c)] =
          img.values[static_cast<std::size_t>((r / factor) * img.cols + c / factor)];
  return out;
}

void write_gray_png(const std::filesystem::path& path, std::int64_t rows, std::int64_t cols,
                    const std::vector<std::uint8_t>& pixels) {
  if (rows < 1 || cols < 1 || pixels.size() != static_cast<std::size_t>(rows * cols)) {
    throw ShapeError("png: pixel buffer does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::int64_t r = 0; r < rows; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + r * cols));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace volsr::cli
