// Copyright 2026 The egru authors
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
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace egru {

// Deterministic random source. std::mt19937 output is pinned by the standard;
// the scalers below avoid std::uniform_*_distribution, whose mapping is
// implementation defined, so identical seeds give identical streams on any
// conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed)) {
    // Mix the high half in so 64-bit seeds differing only above bit 31 still
    // produce distinct streams.
    if (seed >> 32) {
      gen_.seed(static_cast<std::uint32_t>(seed ^ (seed >> 32)) * 2654435761u);
    }
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = gen_() >> 5;  // 27 bits
    const std::uint64_t lo = gen_() >> 6;  // 26 bits
    return static_cast<double>(hi * 67108864ull + lo) / 9007199254740992.0;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint32_t below(std::uint32_t n) {
    const std::uint32_t limit = std::mt19937::max() - std::mt19937::max() % n;
    std::uint32_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(static_cast<std::uint32_t>(i))]);
    }
  }

 private:
  std::mt19937 gen_;
};

}  // namespace egru
