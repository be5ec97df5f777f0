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

#include "volsr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "volsr/error.hpp"

namespace volsr {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

class Radix2 {
 public:
  explicit Radix2(std::size_t n) : n_(n), twiddle_(n / 2), reversed_(n) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = Complex(std::cos(a), std::sin(a));
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      reversed_[i] = r;
    }
  }

  void run(Complex* x, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < reversed_[i]) std::swap(x[i], x[reversed_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          Complex w = twiddle_[k * step];
          if (inverse) w = std::conj(w);
          const Complex u = x[start + k];
          const Complex t = w * x[start + k + half];
          x[start + k] = u + t;
          x[start + k + half] = u - t;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<Complex> twiddle_;
  std::vector<std::size_t> reversed_;
};

// Chirp-z evaluation of an arbitrary-length DFT through power-of-two FFTs.
class Bluestein {
 public:
  explicit Bluestein(std::size_t n) : n_(n), m_(next_pow2(2 * n - 1)), inner_(m_), chirp_(n), kernel_(m_) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto k2 = static_cast<double>((k * k) % (2 * n));
      const double a = -std::numbers::pi * k2 / static_cast<double>(n);
      chirp_[k] = Complex(std::cos(a), std::sin(a));
    }
    kernel_[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n; ++k) {
      kernel_[k] = std::conj(chirp_[k]);
      kernel_[m_ - k] = std::conj(chirp_[k]);
    }
    inner_.run(kernel_.data(), false);
  }

  void run(Complex* x, bool inverse) const {
    std::vector<Complex> a(m_);
    for (std::size_t k = 0; k < n_; ++k) a[k] = (inverse ? std::conj(x[k]) : x[k]) * chirp_[k];
    inner_.run(a.data(), false);
    for (std::size_t k = 0; k < m_; ++k) a[k] *= kernel_[k];
    inner_.run(a.data(), true);
    const double inv_m = 1.0 / static_cast<double>(m_);
    for (std::size_t k = 0; k < n_; ++k) {
      const Complex r = a[k] * inv_m * chirp_[k];
      x[k] = inverse ? std::conj(r) : r;
    }
  }

 private:
  std::size_t n_;
  std::size_t m_;
  Radix2 inner_;
  std::vector<Complex> chirp_;
  std::vector<Complex> kernel_;
};

struct Plan {
  std::unique_ptr<Radix2> radix2;
  std::unique_ptr<Bluestein> bluestein;
};

const Plan& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, Plan> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    Plan p;
    if (is_pow2(n)) {
      p.radix2 = std::make_unique<Radix2>(n);
    } else {
      p.bluestein = std::make_unique<Bluestein>(n);
    }
    it = cache.emplace(n, std::move(p)).first;
  }
  return it->second;
}

void check_scale(Shape3 shape, int scale) {
  if (scale < 1) throw ValidationError("degradation scale must be a positive integer");
  if (!admits_kspace_degrade(shape, scale)) {
    throw ShapeError("k-space degradation requires every dimension divisible by 2*scale (" +
                     std::to_string(2 * scale) + "), got (" + std::to_string(shape.d) + "," +
                     std::to_string(shape.h) + "," + std::to_string(shape.w) + ")");
  }
}

}  // namespace

double Spectrum3D::energy() const {
  double e = 0.0;
  for (const auto& c : bins) e += std::norm(c);
  return e;
}

void fft_inplace(std::span<Complex> data, bool inverse) {
  if (data.size() <= 1) return;
  const Plan& p = plan_for(data.size());
  if (p.radix2) {
    p.radix2->run(data.data(), inverse);
  } else {
    p.bluestein->run(data.data(), inverse);
  }
}

void fft3_inplace(Spectrum3D& s, bool inverse) {
  const auto [d, h, w] = s.shape;
  std::vector<Complex> line;
  // x lines are contiguous
  for (std::int64_t z = 0; z < d; ++z)
    for (std::int64_t y = 0; y < h; ++y) fft_inplace(std::span<Complex>(&s.at(z, y, 0), static_cast<std::size_t>(w)), inverse);
  line.resize(static_cast<std::size_t>(h));
  for (std::int64_t z = 0; z < d; ++z)
    for (std::int64_t x = 0; x < w; ++x) {
      for (std::int64_t y = 0; y < h; ++y) line[static_cast<std::size_t>(y)] = s.at(z, y, x);
      fft_inplace(line, inverse);
      for (std::int64_t y = 0; y < h; ++y) s.at(z, y, x) = line[static_cast<std::size_t>(y)];
    }
  line.resize(static_cast<std::size_t>(d));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      for (std::int64_t z = 0; z < d; ++z) line[static_cast<std::size_t>(z)] = s.at(z, y, x);
      fft_inplace(line, inverse);
      for (std::int64_t z = 0; z < d; ++z) s.at(z, y, x) = line[static_cast<std::size_t>(z)];
    }
}

Spectrum3D dft3_forward(const Volume& v) {
  Spectrum3D s{v.shape(), {}};
  s.bins.assign(v.data().begin(), v.data().end());
  fft3_inplace(s, false);
  return s;
}

InverseResult dft3_inverse(const Spectrum3D& s, Spacing3 spacing) {
  if (s.shape.voxels() <= 0 || static_cast<std::int64_t>(s.bins.size()) != s.shape.voxels()) {
    throw ShapeError("spectrum storage does not match its shape");
  }
  Spectrum3D work = s;
  fft3_inplace(work, true);
  const double inv_n = 1.0 / static_cast<double>(s.shape.voxels());
  InverseResult r;
  std::vector<float> re(work.bins.size());
  for (std::size_t i = 0; i < work.bins.size(); ++i) {
    const Complex c = work.bins[i] * inv_n;
    re[i] = static_cast<float>(c.real());
    r.max_imag = std::max(r.max_imag, std::abs(c.imag()));
    r.max_real = std::max(r.max_real, std::abs(c.real()));
  }
  r.volume = Volume(s.shape, std::move(re), spacing);
  return r;
}

const Volume& require_real(const InverseResult& r, double tol) {
  if (!r.is_real(tol)) {
    throw SymmetryError("inverse transform left an imaginary residue of " + std::to_string(r.max_imag) +
                        " (max real " + std::to_string(r.max_real) + "): spectrum is not conjugate-symmetric");
  }
  return r.volume;
}

bool admits_kspace_degrade(Shape3 shape, int scale) {
  const std::int64_t q = 2 * static_cast<std::int64_t>(scale);
  return scale >= 1 && shape.d % q == 0 && shape.h % q == 0 && shape.w % q == 0;
}

Shape3 kspace_padded_shape(Shape3 shape, int scale) {
  const std::int64_t q = 2 * static_cast<std::int64_t>(scale);
  auto up = [q](std::int64_t n) { return ((n + q - 1) / q) * q; };
  return {up(shape.d), up(shape.h), up(shape.w)};
}

Spectrum3D centered_crop(const Spectrum3D& s, int scale) {
  check_scale(s.shape, scale);
  const std::int64_t n[3] = {s.shape.d, s.shape.h, s.shape.w};
  std::int64_t m[3];
  for (int a = 0; a < 3; ++a) m[a] = n[a] / scale;
  Spectrum3D block{{m[0], m[1], m[2]}, std::vector<Complex>(static_cast<std::size_t>(m[0] * m[1] * m[2]))};
  // Block index j on an axis is frequency f = j - m/2; unshifted source index f mod n.
  auto source = [&](int a, std::int64_t j) {
    const std::int64_t f = j - m[a] / 2;
    return ((f % n[a]) + n[a]) % n[a];
  };
  for (std::int64_t jz = 0; jz < m[0]; ++jz)
    for (std::int64_t jy = 0; jy < m[1]; ++jy)
      for (std::int64_t jx = 0; jx < m[2]; ++jx) {
        const bool nyquist = (m[0] < n[0] && jz == 0) || (m[1] < n[1] && jy == 0) || (m[2] < n[2] && jx == 0);
        block.at(jz, jy, jx) = nyquist ? Complex{} : s.at(source(0, jz), source(1, jy), source(2, jx));
      }
  return block;
}

Spectrum3D zero_pad_centered(const Spectrum3D& block, Shape3 full) {
  const std::int64_t n[3] = {full.d, full.h, full.w};
  const std::int64_t m[3] = {block.shape.d, block.shape.h, block.shape.w};
  for (int a = 0; a < 3; ++a) {
    if (m[a] > n[a]) throw ShapeError("zero-pad target smaller than the spectrum block");
  }
  Spectrum3D out{full, std::vector<Complex>(static_cast<std::size_t>(full.voxels()))};
  auto target = [&](int a, std::int64_t j) {
    const std::int64_t f = j - m[a] / 2;
    return ((f % n[a]) + n[a]) % n[a];
  };
  for (std::int64_t jz = 0; jz < m[0]; ++jz)
    for (std::int64_t jy = 0; jy < m[1]; ++jy)
      for (std::int64_t jx = 0; jx < m[2]; ++jx)
        out.at(target(0, jz), target(1, jy), target(2, jx)) = block.at(jz, jy, jx);
  return out;
}

InverseResult kspace_lowpass(const Volume& v, int scale) {
  check_scale(v.shape(), scale);
  const Spectrum3D full = dft3_forward(v);
  const Spectrum3D padded = zero_pad_centered(centered_crop(full, scale), v.shape());
  return dft3_inverse(padded, v.spacing());
}

Volume kspace_degrade(const Volume& v, int scale) {
  const InverseResult lp = kspace_lowpass(v, scale);
  const Volume& filtered = require_real(lp, 1e-4);
  const Ratio down{1, scale};
  return resample_nearest(filtered, uniform_factor(down));
}

}  // namespace volsr
