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

#include <cstdint>
#include <string_view>

namespace volsr::kernels {

/// Instruction-set variants of the numeric kernels. Scalar is the reference;
/// every other variant is tested for equivalence against it.
enum class Isa { Scalar, Avx2 };

enum class Trans { No, Yes };

using GemmFn = void (*)(Trans ta, Trans tb, std::int64_t m, std::int64_t n, std::int64_t k, double alpha,
                        const double* a, std::int64_t lda, const double* b, std::int64_t ldb, double beta,
                        double* c, std::int64_t ldc);

struct KernelTable {
  Isa isa;
  std::string_view name;
  /// C = alpha * op(A) * op(B) + beta * C, row-major. beta == 0 ignores C's
  /// previous contents (NaN included).
  GemmFn gemm;
  /// y += a * x
  void (*axpy)(std::int64_t n, double a, const double* x, double* y);
  /// y = x >= 0 ? x : slope * x
  void (*leaky_relu_forward)(std::int64_t n, double slope, const double* x, double* y);
  /// gx += (x > 0 ? 1 : slope) * gy; the derivative at 0 is slope.
  void (*leaky_relu_backward)(std::int64_t n, double slope, const double* x, const double* gy, double* gx);
  /// sum |a - b|
  double (*sum_abs_diff)(std::int64_t n, const double* a, const double* b);
};

bool isa_available(Isa isa);
std::string_view isa_name(Isa isa);

/// Kernel table for a specific variant. Throws ConfigError if the variant
/// was not compiled in or the CPU lacks it.
const KernelTable& table(Isa isa);

/// Variant used by the nn ops. Chosen at startup: VOLSR_ISA=scalar|avx2 if
/// set, otherwise the best variant the CPU supports.
const KernelTable& active();
Isa active_isa();
void set_active_isa(Isa isa);

namespace scalar {
extern const KernelTable kTable;
}

#if defined(VOLSR_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace volsr::kernels
