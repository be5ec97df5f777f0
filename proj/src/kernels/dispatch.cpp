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

#include <atomic>
#include <cstdlib>
#include <string>

#include "volsr/error.hpp"
#include "volsr/kernels/kernels.hpp"

namespace volsr::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa best_isa() {
  if (const char* env = std::getenv("VOLSR_ISA")) {
    const std::string s(env);
    if (s == "scalar") return Isa::Scalar;
    if (s == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(best_isa())};
  return slot;
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(VOLSR_HAVE_AVX2)
      return cpu_has_avx2_fma();
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

const KernelTable& table(Isa isa) {
  if (!isa_available(isa)) throw ConfigError(std::string("kernel variant unavailable: ") + std::string(isa_name(isa)));
#if defined(VOLSR_HAVE_AVX2)
  if (isa == Isa::Avx2) return avx2::kTable;
#endif
  return scalar::kTable;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

Isa active_isa() { return active().isa; }

void set_active_isa(Isa isa) { active_slot().store(&table(isa), std::memory_order_relaxed); }

}  // namespace volsr::kernels
