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


#include <atomic>
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "mvsde/parallel.hpp"

TEST_SUITE("parallel") {
  TEST_CASE("every index is visited exactly once") {
    for (unsigned threads : {1u, 2u, 5u}) {
      mvsde::set_thread_count(threads);
      const std::size_t n = 10 * mvsde::kChunkSize + 17;
      std::vector<std::atomic<int>> hits(n);
      mvsde::parallel_chunks(n, [&](std::size_t b, std::size_t e) {
        CHECK(b % mvsde::kChunkSize == 0);
        for (std::size_t i = b; i < e; ++i) hits[i]++;
      });
      for (std::size_t i = 0; i < n; ++i) REQUIRE(hits[i].load() == 1);
    }
    mvsde::set_thread_count(1);
  }

  TEST_CASE("ordered sum is bitwise independent of the thread count") {
    auto f = [](std::size_t i) { return std::sin(0.37 * static_cast<double>(i)) * 1e-3 + 1.0 / (1.0 + i); };
    const std::size_t n = 50000;
    mvsde::set_thread_count(1);
    const double one = mvsde::ordered_sum(n, f);
    for (unsigned threads : {2u, 3u, 8u}) {
      mvsde::set_thread_count(threads);
      const double many = mvsde::ordered_sum(n, f);
      CHECK(std::memcmp(&one, &many, sizeof(double)) == 0);
    }
    mvsde::set_thread_count(1);
  }

  TEST_CASE("zero threads means one") {
    mvsde::set_thread_count(0);
    CHECK(mvsde::thread_count() == 1);
    mvsde::set_thread_count(1);
  }

  TEST_CASE("empty range") {
    int calls = 0;
    mvsde::parallel_chunks(0, [&](std::size_t, std::size_t) { ++calls; });
    CHECK(calls == 0);
  }
}
