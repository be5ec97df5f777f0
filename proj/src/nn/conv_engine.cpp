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

#include "conv_engine.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "volsr/kernels/kernels.hpp"

namespace volsr::nn::engine {

namespace {

using kernels::Trans;

constexpr std::int64_t kColBudget = std::int64_t{1} << 18;  // doubles per im2col chunk

std::int64_t rows_per_chunk(const ConvGeom& g) {
  const std::int64_t per_row = g.patch() * g.oh * g.ow;
  return std::clamp<std::int64_t>(kColBudget / std::max<std::int64_t>(per_row, 1), 1, g.od);
}

// Row pitch of a column chunk. Power-of-two pitches alias in L1 when the
// GEMM walks down the rows, so those get a small pad.
std::int64_t col_pitch(std::int64_t cols) { return cols % 64 == 0 ? cols + 8 : cols; }

bool is_pointwise(const ConvGeom& g) {
  return g.kd == 1 && g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pd == 0 && g.ph == 0 && g.pw == 0;
}

// Column matrix for output planes [oz0, oz1): rows index (ci, a, b, e), columns
// index output voxels of the chunk.
void im2col(const ConvGeom& g, const double* x, std::int64_t oz0, std::int64_t oz1, double* col) {
  const std::int64_t cols = col_pitch((oz1 - oz0) * g.oh * g.ow);
  const std::int64_t s = g.stride;
  for (std::int64_t ci = 0; ci < g.cin; ++ci)
    for (std::int64_t a = 0; a < g.kd; ++a)
      for (std::int64_t b = 0; b < g.kh; ++b)
        for (std::int64_t e = 0; e < g.kw; ++e) {
          double* row = col + (((ci * g.kd + a) * g.kh + b) * g.kw + e) * cols;
          // valid ox range: 0 <= ox*s - pw + e < w
          std::int64_t ox_lo = 0, ox_hi = g.ow;
          if (s == 1) {
            ox_lo = std::clamp<std::int64_t>(g.pw - e, 0, g.ow);
            ox_hi = std::clamp<std::int64_t>(g.w + g.pw - e, ox_lo, g.ow);
          }
          for (std::int64_t oz = oz0; oz < oz1; ++oz) {
            const std::int64_t iz = oz * s - g.pd + a;
            for (std::int64_t oy = 0; oy < g.oh; ++oy) {
              double* dst = row + ((oz - oz0) * g.oh + oy) * g.ow;
              const std::int64_t iy = oy * s - g.ph + b;
              if (iz < 0 || iz >= g.d || iy < 0 || iy >= g.h) {
                std::fill(dst, dst + g.ow, 0.0);
                continue;
              }
              const double* src = x + ((ci * g.d + iz) * g.h + iy) * g.w;
              if (s == 1) {
                std::fill(dst, dst + ox_lo, 0.0);
                std::memcpy(dst + ox_lo, src + ox_lo - g.pw + e, static_cast<std::size_t>(ox_hi - ox_lo) * sizeof(double));
                std::fill(dst + ox_hi, dst + g.ow, 0.0);
              } else {
                for (std::int64_t ox = 0; ox < g.ow; ++ox) {
                  const std::int64_t ix = ox * s - g.pw + e;
                  dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
                }
              }
            }
          }
        }
}

void col2im_add(const ConvGeom& g, const double* col, std::int64_t oz0, std::int64_t oz1, double* x) {
  const std::int64_t cols = col_pitch((oz1 - oz0) * g.oh * g.ow);
  const std::int64_t s = g.stride;
  for (std::int64_t ci = 0; ci < g.cin; ++ci)
    for (std::int64_t a = 0; a < g.kd; ++a)
      for (std::int64_t b = 0; b < g.kh; ++b)
        for (std::int64_t e = 0; e < g.kw; ++e) {
          const double* row = col + (((ci * g.kd + a) * g.kh + b) * g.kw + e) * cols;
          for (std::int64_t oz = oz0; oz < oz1; ++oz) {
            const std::int64_t iz = oz * s - g.pd + a;
            if (iz < 0 || iz >= g.d) continue;
            for (std::int64_t oy = 0; oy < g.oh; ++oy) {
              const std::int64_t iy = oy * s - g.ph + b;
              if (iy < 0 || iy >= g.h) continue;
              const double* src = row + ((oz - oz0) * g.oh + oy) * g.ow;
              double* dst = x + ((ci * g.d + iz) * g.h + iy) * g.w;
              for (std::int64_t ox = 0; ox < g.ow; ++ox) {
                const std::int64_t ix = ox * s - g.pw + e;
                if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
              }
            }
          }
        }
}

thread_local std::vector<double> t_col;

double* col_buffer(std::size_t n) {
  if (t_col.size() < n) t_col.resize(n);
  return t_col.data();
}

}  // namespace

void conv_forward(const ConvGeom& g, const double* x, const double* w, const double* b, double* y,
                  bool accumulate) {
  const auto& k = kernels::active();
  const std::int64_t K = g.patch();
  const std::int64_t P = g.out_spatial();
  const double beta = accumulate ? 1.0 : 0.0;
  for (std::int64_t n = 0; n < g.n; ++n) {
    const double* xn = x + n * g.cin * g.in_spatial();
    double* yn = y + n * g.cout * P;
    if (is_pointwise(g)) {
      k.gemm(Trans::No, Trans::No, g.cout, P, K, 1.0, w, K, xn, P, beta, yn, P);
    } else {
      const std::int64_t rows = rows_per_chunk(g);
      double* col = col_buffer(static_cast<std::size_t>(K * col_pitch(rows * g.oh * g.ow)));
      for (std::int64_t oz0 = 0; oz0 < g.od; oz0 += rows) {
        const std::int64_t oz1 = std::min(g.od, oz0 + rows);
        const std::int64_t pc = (oz1 - oz0) * g.oh * g.ow;
        im2col(g, xn, oz0, oz1, col);
        k.gemm(Trans::No, Trans::No, g.cout, pc, K, 1.0, w, K, col, col_pitch(pc), beta, yn + oz0 * g.oh * g.ow, P);
      }
    }
    if (b) {
      for (std::int64_t co = 0; co < g.cout; ++co) {
        double* row = yn + co * P;
        const double bias = b[co];
        for (std::int64_t p = 0; p < P; ++p) row[p] += bias;
      }
    }
  }
}

void conv_backward_input(const ConvGeom& g, const double* w, const double* gy, double* gx) {
  const auto& k = kernels::active();
  const std::int64_t K = g.patch();
  const std::int64_t P = g.out_spatial();
  if (is_pointwise(g)) {
    for (std::int64_t n = 0; n < g.n; ++n) {
      k.gemm(Trans::Yes, Trans::No, g.cin, P, g.cout, 1.0, w, K, gy + n * g.cout * P, P, 1.0,
             gx + n * g.cin * g.in_spatial(), g.in_spatial());
    }
    return;
  }
  if (g.stride == 1 && g.pd <= g.kd - 1 && g.ph <= g.kh - 1 && g.pw <= g.kw - 1) {
    // Stride-1 input gradient is a correlation of gy with the flipped,
    // channel-transposed kernel.
    ConvGeom t;
    t.n = g.n;
    t.cin = g.cout;
    t.d = g.od;
    t.h = g.oh;
    t.w = g.ow;
    t.cout = g.cin;
    t.kd = g.kd;
    t.kh = g.kh;
    t.kw = g.kw;
    t.stride = 1;
    t.pd = g.kd - 1 - g.pd;
    t.ph = g.kh - 1 - g.ph;
    t.pw = g.kw - 1 - g.pw;
    t.od = g.d;
    t.oh = g.h;
    t.ow = g.w;
    const std::int64_t taps = g.kd * g.kh * g.kw;
    std::vector<double> wt(static_cast<std::size_t>(g.cin * g.cout * taps));
    for (std::int64_t co = 0; co < g.cout; ++co)
      for (std::int64_t ci = 0; ci < g.cin; ++ci)
        for (std::int64_t tap = 0; tap < taps; ++tap)
          wt[static_cast<std::size_t>((ci * g.cout + co) * taps + (taps - 1 - tap))] = w[(co * g.cin + ci) * taps + tap];
    conv_forward(t, gy, wt.data(), nullptr, gx, true);
    return;
  }
  const std::int64_t rows = rows_per_chunk(g);
  double* col = col_buffer(static_cast<std::size_t>(K * col_pitch(rows * g.oh * g.ow)));
  for (std::int64_t n = 0; n < g.n; ++n) {
    const double* gyn = gy + n * g.cout * P;
    double* gxn = gx + n * g.cin * g.in_spatial();
    for (std::int64_t oz0 = 0; oz0 < g.od; oz0 += rows) {
      const std::int64_t oz1 = std::min(g.od, oz0 + rows);
      const std::int64_t pc = (oz1 - oz0) * g.oh * g.ow;
      k.gemm(Trans::Yes, Trans::No, K, pc, g.cout, 1.0, w, K, gyn + oz0 * g.oh * g.ow, P, 0.0, col, col_pitch(pc));
      col2im_add(g, col, oz0, oz1, gxn);
    }
  }
}

void conv_backward_weight(const ConvGeom& g, const double* x, const double* gy, double* gw, double* gb) {
  const auto& k = kernels::active();
  const std::int64_t K = g.patch();
  const std::int64_t P = g.out_spatial();
  for (std::int64_t n = 0; n < g.n; ++n) {
    const double* xn = x + n * g.cin * g.in_spatial();
    const double* gyn = gy + n * g.cout * P;
    if (is_pointwise(g)) {
      k.gemm(Trans::No, Trans::Yes, g.cout, K, P, 1.0, gyn, P, xn, P, 1.0, gw, K);
    } else {
      const std::int64_t rows = rows_per_chunk(g);
      double* col = col_buffer(static_cast<std::size_t>(K * col_pitch(rows * g.oh * g.ow)));
      for (std::int64_t oz0 = 0; oz0 < g.od; oz0 += rows) {
        const std::int64_t oz1 = std::min(g.od, oz0 + rows);
        const std::int64_t pc = (oz1 - oz0) * g.oh * g.ow;
        im2col(g, xn, oz0, oz1, col);
        k.gemm(Trans::No, Trans::Yes, g.cout, K, pc, 1.0, gyn + oz0 * g.oh * g.ow, P, col, col_pitch(pc), 1.0, gw, K);
      }
    }
    if (gb) {
      for (std::int64_t co = 0; co < g.cout; ++co) {
        const double* row = gyn + co * P;
        double s = 0.0;
        for (std::int64_t p = 0; p < P; ++p) s += row[p];
        gb[co] += s;
      }
    }
  }
}

}  // namespace volsr::nn::engine
