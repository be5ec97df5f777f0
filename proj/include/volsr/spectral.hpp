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

#include <complex>
#include <span>
#include <vector>

#include "volsr/volume.hpp"

namespace volsr {

using Complex = std::complex<double>;

/// Unnormalized forward-DFT coefficients of a volume, DC at index (0,0,0),
/// same (z, y, x) layout as the volume it came from.
struct Spectrum3D {
  Shape3 shape{};
  std::vector<Complex> bins;

  Complex& at(std::int64_t z, std::int64_t y, std::int64_t x) {
    return bins[static_cast<std::size_t>((z * shape.h + y) * shape.w + x)];
  }
  const Complex& at(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return bins[static_cast<std::size_t>((z * shape.h + y) * shape.w + x)];
  }
  double energy() const;
};

/// In-place 1D DFT of any length (radix-2 for powers of two, Bluestein
/// otherwise). `inverse` uses the conjugate kernel and does not rescale.
void fft_inplace(std::span<Complex> data, bool inverse);

/// Unscaled 3D transform of a complex grid, applied axis by axis.
void fft3_inplace(Spectrum3D& s, bool inverse);

Spectrum3D dft3_forward(const Volume& v);

struct InverseResult {
  Volume volume;          // real part, scaled by 1/(D*H*W)
  double max_imag = 0.0;  // largest |Im| after scaling
  double max_real = 0.0;  // largest |Re| after scaling

  /// True when max|Im| <= tol * max|Re|.
  bool is_real(double tol = 1e-3) const { return max_imag <= tol * max_real; }
};

/// Inverse DFT. Reports the imaginary residue instead of discarding it;
/// use `require_real` to turn a symmetry violation into a SymmetryError.
InverseResult dft3_inverse(const Spectrum3D& s, Spacing3 spacing = {});
const Volume& require_real(const InverseResult& r, double tol = 1e-3);

/// Low-frequency block of extent shape/scale taken from the DC-centered
/// spectrum. Window per axis covers centered indices [c - m/2, c + m/2);
/// on axes that are actually cropped (m < n) the first plane, which holds
/// the -m/2 Nyquist frequency of the block, is zeroed so the block is
/// conjugate-symmetric. The result is stored DC-centered (DC at m/2).
Spectrum3D centered_crop(const Spectrum3D& s, int scale);

/// Places a DC-centered block back into a zero spectrum of `full` shape,
/// in the unshifted layout (DC at index 0).
Spectrum3D zero_pad_centered(const Spectrum3D& centered_block, Shape3 full);

/// Steps 1-4 of the degradation: forward DFT, centered crop, zero-pad,
/// inverse DFT. Output keeps the input shape.
InverseResult kspace_lowpass(const Volume& v, int scale);

/// Full k-space degradation: low-pass as above followed by nearest
/// downsampling by 1/scale per axis. Every dimension must be divisible by
/// 2*scale. Output spacing is input spacing * scale.
Volume kspace_degrade(const Volume& v, int scale);

/// True if every axis of `shape` is divisible by 2*scale.
bool admits_kspace_degrade(Shape3 shape, int scale);

/// Smallest shape >= `shape` whose axes are divisible by 2*scale.
Shape3 kspace_padded_shape(Shape3 shape, int scale);

}  // namespace volsr
