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

// Independent oracles and helpers shared by the unit tests and the
// acceptance binary. Nothing here calls into the code paths it checks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "volsr/nn/ops.hpp"
#include "volsr/nn/tensor.hpp"
#include "volsr/rng.hpp"
#include "volsr/volume.hpp"

namespace volsr::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "volsr") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Volume random_volume(Shape3 s, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<float> v(static_cast<std::size_t>(s.voxels()));
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return Volume(s, std::move(v));
}

inline nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                                bool requires_grad = true) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(nn::numel(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return nn::Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Volume& a, const Volume& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::fabs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
  }
  return m;
}

/// Weighted sum against a fixed random tensor, so every output element
/// carries a distinct upstream gradient.
inline nn::Tensor probe(const nn::Tensor& y, std::uint64_t seed = 99) {
  return nn::sum(nn::mul(y, random_tensor(y.shape(), seed, -1.0, 1.0, false)));
}

// ---------------------------------------------------------------------------
// Finite differences

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::int64_t checked = 0;
  std::int64_t kinks = 0;  // stencils that straddle a non-differentiable point
  std::string worst;       // "leaf[i]: analytic vs numeric"
};

struct GradCheckOptions {
  double h = 1e-5;
  double floor = 1e-6;       // relative error denominator floor
  std::size_t every = 1;     // perturb every every-th element of each leaf
  // For functions that are piecewise linear along every coordinate (LeakyReLU
  // networks under a linear or L1 loss), a stencil that straddles a kink is
  // detected by its second difference. Within one linear piece that
  // difference is pure rounding; when it is not, the one-sided difference on
  // the kink-free side is the exact derivative, so the analytic value is
  // compared against the nearer of the two one-sided differences.
  bool piecewise_linear = false;
  double kink_threshold = 1e-11;  // second difference, relative to |f|
};

/// Central differences of the scalar `f` with respect to every element of
/// every leaf, compared against the tape gradient. The relative error is
/// |a - n| / max(|a|, |n|, floor).
inline GradCheckResult grad_check(const std::function<nn::Tensor()>& f, std::vector<nn::Tensor> leaves,
                                  const GradCheckOptions& o) {
  for (auto& l : leaves) l.zero_grad();
  nn::backward(f());
  std::vector<std::vector<double>> analytic;
  for (const auto& l : leaves) {
    const auto g = l.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(static_cast<std::size_t>(l.numel()), 0.0);
  }
  GradCheckResult r;
  nn::NoGradGuard guard;
  const double f0 = o.piecewise_linear ? f().item() : 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto data = leaves[li].mutable_data();
    for (std::size_t i = li % o.every; i < data.size(); i += o.every) {
      const double keep = data[i];
      data[i] = keep + o.h;
      const double fp = f().item();
      data[i] = keep - o.h;
      const double fm = f().item();
      data[i] = keep;
      const double a = analytic[li][i];
      double num = (fp - fm) / (2.0 * o.h);
      bool kink = false;
      if (o.piecewise_linear) {
        const double scale = std::max({std::fabs(fp), std::fabs(f0), std::fabs(fm), 1.0});
        if (std::fabs(fp - 2.0 * f0 + fm) > o.kink_threshold * scale) {
          kink = true;
          ++r.kinks;
          const double fwd = (fp - f0) / o.h, bwd = (f0 - fm) / o.h;
          num = std::fabs(a - fwd) < std::fabs(a - bwd) ? fwd : bwd;
        }
      }
      const double rel = std::fabs(a - num) / std::max({std::fabs(a), std::fabs(num), o.floor});
      ++r.checked;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        std::ostringstream os;
        os.precision(9);
        os << "leaf" << li << "[" << i << "]: " << a << " vs " << num << (kink ? " (kink)" : "") << ", f=" << fp;
        r.worst = os.str();
      }
    }
  }
  return r;
}

inline GradCheckResult grad_check(const std::function<nn::Tensor()>& f, std::vector<nn::Tensor> leaves,
                                  double h = 1e-5, double floor = 1e-6, std::size_t every = 1) {
  GradCheckOptions o;
  o.h = h;
  o.floor = floor;
  o.every = every;
  return grad_check(f, std::move(leaves), o);
}

// ---------------------------------------------------------------------------
// Spectral oracle

/// Triple-sum DFT, DC at (0,0,0), z-major layout.
inline std::vector<std::complex<double>> naive_dft3(const Volume& v) {
  const Shape3 s = v.shape();
  std::vector<std::complex<double>> out(static_cast<std::size_t>(s.voxels()));
  const double tau = 2.0 * std::numbers::pi;
  for (std::int64_t kz = 0; kz < s.d; ++kz)
    for (std::int64_t ky = 0; ky < s.h; ++ky)
      for (std::int64_t kx = 0; kx < s.w; ++kx) {
        std::complex<double> acc = 0.0;
        for (std::int64_t z = 0; z < s.d; ++z)
          for (std::int64_t y = 0; y < s.h; ++y)
            for (std::int64_t x = 0; x < s.w; ++x) {
              const double ph = -tau * (static_cast<double>(kz * z) / s.d + static_cast<double>(ky * y) / s.h +
                                        static_cast<double>(kx * x) / s.w);
              acc += static_cast<double>(v.at(z, y, x)) * std::complex<double>(std::cos(ph), std::sin(ph));
            }
        out[static_cast<std::size_t>((kz * s.h + ky) * s.w + kx)] = acc;
      }
  return out;
}

/// Separable cosine with integer frequencies (fz, fy, fx) cycles per edge.
inline Volume cosine_volume(Shape3 s, int fz, int fy, int fx) {
  const double tau = 2.0 * std::numbers::pi;
  return Volume::from_function(s, [&](std::int64_t z, std::int64_t y, std::int64_t x) {
    return static_cast<float>(std::cos(tau * fz * static_cast<double>(z) / s.d) *
                              std::cos(tau * fy * static_cast<double>(y) / s.h) *
                              std::cos(tau * fx * static_cast<double>(x) / s.w));
  });
}

// ---------------------------------------------------------------------------
// Direct-loop convolution oracle (cross-correlation, no flip).

inline std::vector<double> direct_conv3d(const nn::Tensor& x, const nn::Tensor& w, const nn::Tensor& b, int stride,
                                         int pad, nn::Shape& out_shape) {
  const auto N = x.dim(0), Ci = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const auto Co = w.dim(0), kd = w.dim(2), kh = w.dim(3), kw = w.dim(4);
  const auto Do = (D + 2 * pad - kd) / stride + 1, Ho = (H + 2 * pad - kh) / stride + 1,
             Wo = (W + 2 * pad - kw) / stride + 1;
  out_shape = {N, Co, Do, Ho, Wo};
  std::vector<double> out(static_cast<std::size_t>(N * Co * Do * Ho * Wo), 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t co = 0; co < Co; ++co)
      for (std::int64_t oz = 0; oz < Do; ++oz)
        for (std::int64_t oy = 0; oy < Ho; ++oy)
          for (std::int64_t ox = 0; ox < Wo; ++ox) {
            double acc = b.defined() ? b.data()[static_cast<std::size_t>(co)] : 0.0;
            for (std::int64_t ci = 0; ci < Ci; ++ci)
              for (std::int64_t a = 0; a < kd; ++a)
                for (std::int64_t bb = 0; bb < kh; ++bb)
                  for (std::int64_t c = 0; c < kw; ++c) {
                    const auto iz = oz * stride + a - pad, iy = oy * stride + bb - pad, ix = ox * stride + c - pad;
                    if (iz < 0 || iy < 0 || ix < 0 || iz >= D || iy >= H || ix >= W) continue;
                    acc += xd[static_cast<std::size_t>((((n * Ci + ci) * D + iz) * H + iy) * W + ix)] *
                           wd[static_cast<std::size_t>((((co * Ci + ci) * kd + a) * kh + bb) * kw + c)];
                  }
            out[static_cast<std::size_t>((((n * Co + co) * Do + oz) * Ho + oy) * Wo + ox)] = acc;
          }
  return out;
}

// ---------------------------------------------------------------------------
// Metric oracles

/// SSIM from its defining formula: at every valid window position the
/// Gaussian-weighted means, variances and covariance are summed directly
/// over the full 3D window, then the per-position index is averaged.
inline double direct_ssim3d(const Volume& a, const Volume& b, double range, int win = 11, double sigma = 1.5,
                            double k1 = 0.01, double k2 = 0.03) {
  std::vector<double> g(static_cast<std::size_t>(win));
  double gs = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - (win - 1) / 2.0;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * sigma * sigma));
    gs += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= gs;
  const double c1 = (k1 * range) * (k1 * range), c2 = (k2 * range) * (k2 * range);
  const Shape3 s = a.shape();
  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t z0 = 0; z0 + win <= s.d; ++z0)
    for (std::int64_t y0 = 0; y0 + win <= s.h; ++y0)
      for (std::int64_t x0 = 0; x0 + win <= s.w; ++x0) {
        double ma = 0, mb = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j)
            for (int k = 0; k < win; ++k) {
              const double w = g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(k)];
              ma += w * a.at(z0 + i, y0 + j, x0 + k);
              mb += w * b.at(z0 + i, y0 + j, x0 + k);
            }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j)
            for (int k = 0; k < win; ++k) {
              const double w = g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(k)];
              const double da = a.at(z0 + i, y0 + j, x0 + k) - ma;
              const double db = b.at(z0 + i, y0 + j, x0 + k) - mb;
              va += w * da * da;
              vb += w * db * db;
              cov += w * da * db;
            }
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / static_cast<double>(count);
}

inline double direct_psnr(const Volume& a, const Volume& b, double range) {
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data().size());
  return 10.0 * std::log10(range * range / mse);
}

// ---------------------------------------------------------------------------
// Sliding-window oracle

/// Tile starts along one axis: every multiple of `stride` whose tile stays
/// strictly inside, then one tile flush with the far edge.
inline std::vector<std::int64_t> oracle_origins(std::int64_t n, std::int64_t w, std::int64_t stride) {
  std::vector<std::int64_t> o;
  for (std::int64_t k = 0; k * stride + w < n; ++k) o.push_back(k * stride);
  if (o.empty() || o.back() != n - w) o.push_back(n - w);
  return o;
}

inline double oracle_blend(std::int64_t i, std::int64_t window, bool gaussian) {
  if (!gaussian) return 1.0;
  const double sigma = window / 8.0;
  const double d = i - (window - 1) / 2.0;
  return std::exp(-d * d / (2 * sigma * sigma));
}

/// For every HR voxel, visits every tile that covers it and forms the
/// weighted mean of the tile predictions. `predict` maps an LR tile to its
/// HR output.
inline std::vector<double> brute_force_tiling(const Volume& lr, std::int64_t hr_window, int scale, double overlap,
                                              bool gaussian, const std::function<Volume(const Volume&)>& predict) {
  const std::int64_t lw = hr_window / scale;
  const auto stride = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(lw * (1.0 - overlap) + 1e-9)));
  const Shape3 ls = lr.shape();
  const auto oz = oracle_origins(ls.d, lw, stride), oy = oracle_origins(ls.h, lw, stride),
             ox = oracle_origins(ls.w, lw, stride);
  struct Tile {
    std::int64_t z, y, x;
    Volume out;
  };
  std::vector<Tile> tiles;
  for (auto z : oz)
    for (auto y : oy)
      for (auto x : ox) tiles.push_back({z * scale, y * scale, x * scale, predict(lr.crop({z, y, x}, {lw, lw, lw}))});
  const Shape3 hs{ls.d * scale, ls.h * scale, ls.w * scale};
  std::vector<double> out(static_cast<std::size_t>(hs.voxels()));
  for (std::int64_t z = 0; z < hs.d; ++z)
    for (std::int64_t y = 0; y < hs.h; ++y)
      for (std::int64_t x = 0; x < hs.w; ++x) {
        double num = 0, den = 0;
        for (const auto& t : tiles) {
          const auto lz = z - t.z, ly = y - t.y, lx = x - t.x;
          if (lz < 0 || ly < 0 || lx < 0 || lz >= hr_window || ly >= hr_window || lx >= hr_window) continue;
          const double w = oracle_blend(lz, hr_window, gaussian) * oracle_blend(ly, hr_window, gaussian) *
                           oracle_blend(lx, hr_window, gaussian);
          num += w * t.out.at(lz, ly, lx);
          den += w;
        }
        out[static_cast<std::size_t>((z * hs.h + y) * hs.w + x)] = num / den;
      }
  return out;
}

}  // namespace volsr::test
