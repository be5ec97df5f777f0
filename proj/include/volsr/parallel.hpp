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
#include <functional>

namespace volsr {

/// Worker count used by data-parallel loops. Defaults to 1; the CLI sets it
/// from --threads / VOLSR_THREADS.
int num_threads();
void set_num_threads(int n);

/// Splits [0, n) into contiguous ranges and runs `fn(begin, end)` on each,
/// possibly concurrently. Callers must make every output element depend on
/// exactly one range so results do not vary with the thread count.
void parallel_for(std::int64_t n, std::int64_t min_grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace volsr
