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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "volsr/error.hpp"
#include "volsr/kernels/kernels.hpp"
#include "volsr/parallel.hpp"
#include "volsr/rng.hpp"

using namespace volsr;
using namespace volsr::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// C = alpha * op(A) op(B) + beta * C by the defining triple loop.
void naive_gemm(Trans ta, Trans tb, std::int64_t m, std::int64_t n, std::int64_t k, double alpha, const double* a,
                std::int64_t lda, const double* b, std::int64_t ldb, double beta, double* c, std::int64_t ldc) {
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) {
        const double av = ta == Trans::No ? a[i * lda + p] : a[p * lda + i];
        const double bv = tb == Trans::No ? b[p * ldb + j] : b[j * ldb + p];
        acc += av * bv;
      }
      c[i * ldc + j] = alpha * acc + (beta == 0.0 ? 0.0 : beta * c[i * ldc + j]);
    }
}

std::vector<const KernelTable*> variants() {
  std::vector<const KernelTable*> out{&table(Isa::Scalar)};
  if (isa_available(Isa::Avx2)) out.push_back(&table(Isa::Avx2));
  return out;
}

struct GemmCase {
  std::int64_t m, n, k;
};

}  // namespace

TEST_CASE("dispatch exposes the scalar reference and the active variant") {
  CHECK(isa_available(Isa::Scalar));
  CHECK(table(Isa::Scalar).isa == Isa::Scalar);
  CHECK(isa_name(Isa::Scalar) == "scalar");
  CHECK(isa_name(Isa::Avx2) == "avx2");
  const Isa before = active_isa();
  set_active_isa(Isa::Scalar);
  CHECK(active().isa == Isa::Scalar);
  set_active_isa(before);
  CHECK(active_isa() == before);
  if (!isa_available(Isa::Avx2)) CHECK_THROWS_AS(table(Isa::Avx2), ConfigError);
}

TEST_CASE("gemm variants match the triple-loop oracle") {
  const std::vector<GemmCase> cases{{1, 1, 1},   {3, 5, 7},    {4, 8, 16},  {13, 17, 19}, {32, 64, 27},
                                    {33, 65, 9}, {8, 200, 40}, {70, 3, 130}, {5, 72, 216}};
  for (const KernelTable* kt : variants()) {
    for (const auto& gc : cases)
      for (Trans ta : {Trans::No, Trans::Yes})
        for (Trans tb : {Trans::No, Trans::Yes})
          for (double beta : {0.0, 1.0, -0.5}) {
            // Padded leading dimensions exercise the stride handling.
            const std::int64_t lda = (ta == Trans::No ? gc.k : gc.m) + 3;
            const std::int64_t ldb = (tb == Trans::No ? gc.n : gc.k) + 5;
            const std::int64_t ldc = gc.n + 2;
            const auto a = random_vec(static_cast<std::size_t>((ta == Trans::No ? gc.m : gc.k) * lda), 1);
            const auto b = random_vec(static_cast<std::size_t>((tb == Trans::No ? gc.k : gc.n) * ldb), 2);
            auto c0 = random_vec(static_cast<std::size_t>(gc.m * ldc), 3);
            if (beta == 0.0) c0.assign(c0.size(), std::numeric_limits<double>::quiet_NaN());
            auto expect = c0;
            auto got = c0;
            naive_gemm(ta, tb, gc.m, gc.n, gc.k, 1.5, a.data(), lda, b.data(), ldb, beta, expect.data(), ldc);
            kt->gemm(ta, tb, gc.m, gc.n, gc.k, 1.5, a.data(), lda, b.data(), ldb, beta, got.data(), ldc);
            double err = 0.0;
            for (std::int64_t i = 0; i < gc.m; ++i)
              for (std::int64_t j = 0; j < gc.n; ++j) {
                err = std::max(err, std::fabs(got[static_cast<std::size_t>(i * ldc + j)] -
                                              expect[static_cast<std::size_t>(i * ldc + j)]));
              }
            INFO(kt->name << " m=" << gc.m << " n=" << gc.n << " k=" << gc.k << " ta=" << int(ta) << " tb=" << int(tb)
                          << " beta=" << beta);
            CHECK(err <= 1e-12 * static_cast<double>(gc.k + 1));
          }
  }
}

TEST_CASE("gemm leaves the padding columns of C untouched") {
  for (const KernelTable* kt : variants()) {
    const std::int64_t m = 9, n = 11, k = 6, ldc = 16;
    const auto a = random_vec(m * k, 4), b = random_vec(k * n, 5);
    std::vector<double> c(static_cast<std::size_t>(m * ldc), 42.0);
    kt->gemm(Trans::No, Trans::No, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0, c.data(), ldc);
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = n; j < ldc; ++j) CHECK(c[static_cast<std::size_t>(i * ldc + j)] == 42.0);
  }
}

TEST_CASE("elementwise kernels agree across variants") {
  const auto& ref = table(Isa::Scalar);
  for (const KernelTable* kt : variants()) {
    for (std::int64_t n : {0, 1, 3, 4, 5, 8, 31, 1000}) {
      auto x = random_vec(static_cast<std::size_t>(n), 7);
      if (n > 2) x[2] = 0.0;  // the kink
      const auto gy = random_vec(static_cast<std::size_t>(n), 8);

      std::vector<double> y0(x.size()), y1(x.size());
      ref.leaky_relu_forward(n, 0.2, x.data(), y0.data());
      kt->leaky_relu_forward(n, 0.2, x.data(), y1.data());
      CHECK(y0 == y1);

      std::vector<double> g0(x.size(), 0.5), g1(x.size(), 0.5);
      ref.leaky_relu_backward(n, 0.2, x.data(), gy.data(), g0.data());
      kt->leaky_relu_backward(n, 0.2, x.data(), gy.data(), g1.data());
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(g0[i] - g1[i]) <= 1e-15);
      if (n > 2) CHECK(g1[2] == doctest::Approx(0.5 + 0.2 * gy[2]));

      std::vector<double> a0(x.size(), 1.0), a1(x.size(), 1.0);
      ref.axpy(n, -0.3, x.data(), a0.data());
      kt->axpy(n, -0.3, x.data(), a1.data());
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(a0[i] - a1[i]) <= 1e-15);

      const double s0 = ref.sum_abs_diff(n, x.data(), gy.data());
      const double s1 = kt->sum_abs_diff(n, x.data(), gy.data());
      CHECK(std::fabs(s0 - s1) <= 1e-12 * std::max<double>(1.0, static_cast<double>(n)));
    }
  }
}

TEST_CASE("leaky relu forward values") {
  const double x[3] = {-1.0, 0.0, 2.0};
  for (const KernelTable* kt : variants()) {
    double y[3];
    kt->leaky_relu_forward(3, 0.2, x, y);
    CHECK(y[0] == doctest::Approx(-0.2));
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.0);
  }
}

TEST_CASE("parallel_for covers every index once and rethrows worker errors") {
  for (int threads : {1, 2, 5}) {
    volsr::set_num_threads(threads);
    CHECK(volsr::num_threads() == threads);
    std::vector<int> seen(103, 0);
    volsr::parallel_for(103, 4, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i) ++seen[static_cast<std::size_t>(i)];
    });
    for (int s : seen) CHECK(s == 1);
    CHECK_THROWS_AS(volsr::parallel_for(50, 1,
                                        [](std::int64_t b, std::int64_t) {
                                          if (b > 0) throw volsr::ValidationError("worker");
                                          if (volsr::num_threads() == 1) throw volsr::ValidationError("serial");
                                        }),
                    volsr::ValidationError);
  }
  volsr::set_num_threads(0);
  CHECK(volsr::num_threads() == 1);
  int calls = 0;
  volsr::parallel_for(0, 1, [&](std::int64_t, std::int64_t) { ++calls; });
  CHECK(calls == 0);
}
