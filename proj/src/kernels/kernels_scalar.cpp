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

#include <cmath>

#include "gemm_driver.inl"

namespace volsr::kernels::scalar {

namespace {

struct Micro {
  static constexpr std::int64_t MR = 4;
  static constexpr std::int64_t NR = 8;

  static void run(std::int64_t kc, const double* ap, const double* bp, std::int64_t ldb, double* c, std::int64_t ldc) {
    double acc[MR][NR] = {};
    for (std::int64_t p = 0; p < kc; ++p) {
      for (std::int64_t i = 0; i < MR; ++i) {
        const double a = ap[p * MR + i];
        for (std::int64_t j = 0; j < NR; ++j) acc[i][j] += a * bp[p * ldb + j];
      }
    }
    for (std::int64_t i = 0; i < MR; ++i)
      for (std::int64_t j = 0; j < NR; ++j) c[i * ldc + j] += acc[i][j];
  }
};

void gemm(Trans ta, Trans tb, std::int64_t m, std::int64_t n, std::int64_t k, double alpha, const double* a,
          std::int64_t lda, const double* b, std::int64_t ldb, double beta, double* c, std::int64_t ldc) {
  gemm_driver<Micro>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void axpy(std::int64_t n, double a, const double* x, double* y) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void leaky_relu_forward(std::int64_t n, double slope, const double* x, double* y) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::int64_t n, double slope, const double* x, const double* gy, double* gx) {
  for (std::int64_t i = 0; i < n; ++i) gx[i] += (x[i] > 0.0 ? 1.0 : slope) * gy[i];
}

double sum_abs_diff(std::int64_t n, const double* a, const double* b) {
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

}  // namespace

const KernelTable kTable{Isa::Scalar, "scalar", &gemm, &axpy, &leaky_relu_forward, &leaky_relu_backward,
                         &sum_abs_diff};

}  // namespace volsr::kernels::scalar
