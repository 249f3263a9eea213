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
#include <optional>

namespace egru {

// Q15: int16 raw value r representing r / 2^15, so the domain is [-1, 1).
using q15_t = std::int16_t;

// 32-bit accumulator at the same 2^-15 scale. Sums of Q15 products live here
// before being clipped or narrowed.
using acc32_t = std::int32_t;

inline constexpr q15_t kQ15Max = 32767;
inline constexpr q15_t kQ15Min = -32768;
inline constexpr acc32_t kQ15One = 32768;  // 1.0 at accumulator scale

// Accumulators are clipped to |r| <= 2^21 - 1, i.e. value magnitude < 64.
// That keeps the numerator of softsign_q15 (x << 10) inside 32 bits.
inline constexpr acc32_t kAccMax = (1 << 21) - 1;

constexpr q15_t sat_q15(acc32_t x) {
  return static_cast<q15_t>(std::clamp<acc32_t>(x, kQ15Min, kQ15Max));
}

constexpr q15_t sat_add(q15_t a, q15_t b) {
  return sat_q15(static_cast<acc32_t>(a) + static_cast<acc32_t>(b));
}

// (a * b) >> 15, saturated. The only product needing saturation is
// -1 * -1, which would round to +1 and does not exist in Q15.
constexpr q15_t q15_mul(q15_t a, q15_t b) {
  return sat_q15((static_cast<acc32_t>(a) * static_cast<acc32_t>(b)) >> 15);
}

// (a << 15) / b with truncating division, saturated into Q15.
// b == 0 is a contract violation and yields nullopt.
constexpr std::optional<q15_t> q15_div(q15_t a, q15_t b) {
  if (b == 0) return std::nullopt;
  return sat_q15((static_cast<acc32_t>(a) << 15) / static_cast<acc32_t>(b));
}

constexpr acc32_t clip_acc(acc32_t x) {
  return std::clamp<acc32_t>(x, -kAccMax, kAccMax);
}

// Integer softsign: Q15 approximation of x / (1 + |x|) on a clipped
// accumulator. num = x << 10 stays inside 32 bits for |x| <= kAccMax, and
// den = (|x| + 1.0) >> 5 carries the remaining scale, so num / den lands on
// the Q15 grid. Callers clip first; softsign_q15(clip_acc(x)) is always safe.
constexpr q15_t softsign_q15(acc32_t x) {
  const acc32_t num = x << 10;
  const acc32_t mag = x < 0 ? -x : x;
  const acc32_t den = (mag + kQ15One) >> 5;
  return static_cast<q15_t>(num / den);
}

// Gate activation (softsign(x) + 1) / 2, in [0, 32767]. Maps 0 to 16384.
constexpr q15_t gate_softsign_q15(acc32_t x) {
  return static_cast<q15_t>(
      (static_cast<acc32_t>(softsign_q15(x)) + kQ15One) >> 1);
}

constexpr q15_t relu_q15(q15_t x) { return x < 0 ? q15_t{0} : x; }

constexpr double q15_to_real(q15_t q) { return static_cast<double>(q) / 32768.0; }
constexpr double acc_to_real(acc32_t a) { return static_cast<double>(a) / 32768.0; }

// Nearest Q15 to v, saturating outside [-1, 1 - 2^-15].
inline q15_t q15_from_real(double v) {
  return sat_q15(static_cast<acc32_t>(std::llround(v * 32768.0)));
}

}  // namespace egru
