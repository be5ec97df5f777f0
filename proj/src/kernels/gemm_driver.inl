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

// Blocked GEMM driver shared by every ISA translation unit. Each including
// file supplies a Micro type with MR, NR and
//   static void run(int64_t kc, const double* ap, const double* bp, int64_t ldb, double* c, int64_t ldc);
// which accumulates an MR x NR tile: c[i*ldc + j] += sum_p ap[p*MR + i] * bp[p*ldb + j].
// B is read in place when it is row-major and A is short, otherwise packed.
//
// Per-element arithmetic does not depend on how columns are split across
// threads, so results are identical for any thread count.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "volsr/kernels/kernels.hpp"
#include "volsr/parallel.hpp"

namespace {

constexpr std::int64_t kKc = 256;
constexpr std::int64_t kMc = 128;
constexpr std::int64_t kNc = 1024;

template <class Micro>
void pack_a(volsr::kernels::Trans ta, const double* a, std::int64_t lda, std::int64_t i0, std::int64_t mc,
            std::int64_t p0, std::int64_t kc, double alpha, double* out) {
  constexpr std::int64_t MR = Micro::MR;
  for (std::int64_t ir = 0; ir < mc; ir += MR) {
    const std::int64_t rows = std::min(MR, mc - ir);
    for (std::int64_t p = 0; p < kc; ++p) {
      for (std::int64_t i = 0; i < MR; ++i) {
        double v = 0.0;
        if (i < rows) {
          const std::int64_t gi = i0 + ir + i, gp = p0 + p;
          v = alpha * (ta == volsr::kernels::Trans::No ? a[gi * lda + gp] : a[gp * lda + gi]);
        }
        *out++ = v;
      }
    }
  }
}

template <class Micro>
void pack_b(volsr::kernels::Trans tb, const double* b, std::int64_t ldb, std::int64_t p0, std::int64_t kc,
            std::int64_t j0, std::int64_t nc, double* out) {
  constexpr std::int64_t NR = Micro::NR;
  for (std::int64_t jr = 0; jr < nc; jr += NR) {
    const std::int64_t cols = std::min(NR, nc - jr);
    for (std::int64_t p = 0; p < kc; ++p) {
      const std::int64_t gp = p0 + p;
      if (tb == volsr::kernels::Trans::No && cols == NR) {
        const double* src = b + gp * ldb + j0 + jr;
        for (std::int64_t j = 0; j < NR; ++j) out[j] = src[j];
      } else {
        for (std::int64_t j = 0; j < NR; ++j) {
          double v = 0.0;
          if (j < cols) {
            const std::int64_t gj = j0 + jr + j;
            v = tb == volsr::kernels::Trans::No ? b[gp * ldb + gj] : b[gj * ldb + gp];
          }
          out[j] = v;
        }
      }
      out += NR;
    }
  }
}

// A with at most this many rows is cheap to stream B past, so a row-major B
// is then read in place rather than packed.
constexpr std::int64_t kDirectBMaxRows = 32;

template <class Micro>
void gemm_columns(volsr::kernels::Trans ta, volsr::kernels::Trans tb, std::int64_t m, std::int64_t jbeg,
                  std::int64_t jend, std::int64_t k, double alpha, const double* a, std::int64_t lda,
                  const double* b, std::int64_t ldb, double* c, std::int64_t ldc) {
  constexpr std::int64_t MR = Micro::MR;
  constexpr std::int64_t NR = Micro::NR;
  const bool direct_b = tb == volsr::kernels::Trans::No && m <= kDirectBMaxRows;
  thread_local std::vector<double> apack, bpack;
  apack.resize(static_cast<std::size_t>(((kMc + MR - 1) / MR) * MR * kKc));
  bpack.resize(static_cast<std::size_t>(((kNc + NR - 1) / NR) * NR * kKc));
  alignas(64) double tile[MR * NR];

  for (std::int64_t jc = jbeg; jc < jend; jc += kNc) {
    const std::int64_t nc = std::min(kNc, jend - jc);
    for (std::int64_t pc = 0; pc < k; pc += kKc) {
      const std::int64_t kc = std::min(kKc, k - pc);
      if (!direct_b) pack_b<Micro>(tb, b, ldb, pc, kc, jc, nc, bpack.data());
      for (std::int64_t ic = 0; ic < m; ic += kMc) {
        const std::int64_t mc = std::min(kMc, m - ic);
        pack_a<Micro>(ta, a, lda, ic, mc, pc, kc, alpha, apack.data());
        for (std::int64_t jr = 0; jr < nc; jr += NR) {
          const std::int64_t cols = std::min(NR, nc - jr);
          const double* bp = nullptr;
          std::int64_t bstride = NR;
          if (!direct_b) {
            bp = bpack.data() + (jr / NR) * NR * kc;
          } else if (cols == NR) {
            bp = b + pc * ldb + jc + jr;
            bstride = ldb;
          } else {
            pack_b<Micro>(tb, b, ldb, pc, kc, jc + jr, cols, bpack.data());
            bp = bpack.data();
          }
          for (std::int64_t ir = 0; ir < mc; ir += MR) {
            const std::int64_t rows = std::min(MR, mc - ir);
            const double* ap = apack.data() + (ir / MR) * MR * kc;
            double* cp = c + (ic + ir) * ldc + jc + jr;
            if (rows == MR && cols == NR) {
              Micro::run(kc, ap, bp, bstride, cp, ldc);
            } else {
              std::fill(tile, tile + MR * NR, 0.0);
              Micro::run(kc, ap, bp, bstride, tile, NR);
              for (std::int64_t i = 0; i < rows; ++i)
                for (std::int64_t j = 0; j < cols; ++j) cp[i * ldc + j] += tile[i * NR + j];
            }
          }
        }
      }
    }
  }
}

template <class Micro>
void gemm_driver(volsr::kernels::Trans ta, volsr::kernels::Trans tb, std::int64_t m, std::int64_t n,
                 std::int64_t k, double alpha, const double* a, std::int64_t lda, const double* b,
                 std::int64_t ldb, double beta, double* c, std::int64_t ldc) {
  if (m <= 0 || n <= 0) return;
  if (beta != 1.0) {
    for (std::int64_t i = 0; i < m; ++i) {
      double* row = c + i * ldc;
      if (beta == 0.0) {
        std::fill(row, row + n, 0.0);
      } else {
        for (std::int64_t j = 0; j < n; ++j) row[j] *= beta;
      }
    }
  }
  if (k <= 0 || alpha == 0.0) return;
  constexpr std::int64_t NR = Micro::NR;
  const std::int64_t panels = (n + NR - 1) / NR;
  // Split only on NR-aligned column boundaries.
  volsr::parallel_for(panels, std::max<std::int64_t>(1, 4096 / (m * NR) + 1), [&](std::int64_t pb, std::int64_t pe) {
    gemm_columns<Micro>(ta, tb, m, pb * NR, std::min(n, pe * NR), k, alpha, a, lda, b, ldb, c, ldc);
  });
}

}  // namespace
