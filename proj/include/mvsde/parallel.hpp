// Copyright 2026 The mvsde Authors
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

#include <cstddef>
#include <functional>
#include <vector>

namespace mvsde {

// Process-wide worker count used by parallel_chunks. Results never depend on it:
// work is split into fixed-size chunks whose boundaries are independent of
// the number of threads, and reductions combine chunk results in index order.
void set_thread_count(unsigned n);
unsigned thread_count();

inline constexpr std::size_t kChunkSize = 1024;

// Calls body(begin, end) for every chunk of [0, n). Chunks may run
// concurrently; body must only write to chunk-local state.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// Deterministic sum of f(i) over [0, n): per-chunk partial sums in a fixed
// order, then combined left to right.
template <class F>
double ordered_sum(std::size_t n, F&& f) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += f(i);
    partial[b / kChunkSize] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace mvsde
