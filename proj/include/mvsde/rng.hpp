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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace mvsde {

// Philox4x32-10 block cipher (Salmon et al., SC'11). Stateless: the output is
// a pure function of (counter, key), which is what makes the streams below
// reproducible under any thread schedule.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

// Purpose tags keep independent uses of one seed on disjoint counter ranges.
enum class StreamTag : std::uint32_t {
  kNoise = 0,
  kInitA = 1,
  kInitB = 2,
  kSubsample = 3,
  kAux = 4,
};

// Gaussian draws keyed by (seed, tag, particle, step). Two systems that share
// a seed and tag see identical increments, which is how shared-noise
// coupling and common random numbers are realised.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, StreamTag tag) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        tag_(static_cast<std::uint32_t>(tag)) {}

  // Fills `out` with i.i.d. N(0,1) values for one (particle, step) cell.
  void fill(std::uint64_t particle, std::uint64_t step, std::span<double> out) const noexcept {
    std::size_t k = 0;
    std::uint32_t block = 0;
    while (k < out.size()) {
      const auto bits = Philox4x32::generate(
          {block, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(particle),
           tag_ ^ (static_cast<std::uint32_t>(step >> 32) << 8) ^
               (static_cast<std::uint32_t>(particle >> 32) << 20)},
          key_);
      const double u1 = to_open_unit(bits[0], bits[1]);
      const double u2 = to_open_unit(bits[2], bits[3]);
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      out[k++] = r * std::cos(angle);
      if (k < out.size()) out[k++] = r * std::sin(angle);
      ++block;
    }
  }

  double uniform(std::uint64_t particle, std::uint64_t step) const noexcept {
    const auto bits = Philox4x32::generate(
        {0xFFFFFFFFu, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(particle), tag_},
        key_);
    return to_open_unit(bits[0], bits[1]);
  }

  // 53-bit uniform on (0, 1). The top value rounds up to 1 and is pulled
  // back to the largest double below it.
  static double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t v = (std::uint64_t{hi} << 21) ^ (lo >> 11);
    return std::min((static_cast<double>(v & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1.0p-53, 0x1.fffffffffffffp-1);
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t tag_;
};

}  // namespace mvsde
