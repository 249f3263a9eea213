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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "egru/fixedpoint.hpp"

namespace egru {

// 3-bit weight code. Bit 2 is the sign, bits 1:0 select the power-of-two
// magnitude via a right shift:
//
//   code 0 -> +1.00    code 4 -> -1.00
//   code 1 -> +0.50    code 5 -> -0.50
//   code 2 -> +0.25    code 6 -> -0.25
//   code 7 ->  0       code 3 ->  invalid (never produced)
using wcode_t = std::uint8_t;

inline constexpr wcode_t kCodeZero = 7;
inline constexpr wcode_t kCodeInvalid = 3;

constexpr bool is_valid_code(wcode_t c) { return c < 8 && c != kCodeInvalid; }

// Exact real value of a valid code.
constexpr double decode_unchecked(wcode_t c) {
  if (c == kCodeZero) return 0.0;
  const double mag = 1.0 / static_cast<double>(1 << (c & 3));
  return (c & 4) ? -mag : mag;
}

constexpr std::optional<double> decode(wcode_t c) {
  if (!is_valid_code(c)) return std::nullopt;
  return decode_unchecked(c);
}

// Projects a real weight onto the seven levels:
//   +1 for w >= 1, -1 for w <= -1, 0 for |w| <= 0.25,
//   otherwise sign(w) * 2^round(log2 |w|) with ties rounded to even.
// The |w| = 0.25 boundary belongs to the zero case, so 0.25 itself maps to
// code 7 even though +0.25 is a representable level. Non-finite input is
// rejected.
std::optional<wcode_t> quantize(double w);

// Code for a value that is exactly one of the seven levels.
std::optional<wcode_t> encode_level(double level);

// Multiplies x by the decoded weight using only shift and negate:
// zero for code 7, otherwise an arithmetic right shift by (code & 3) and a
// conditional negation. Matches decode_unchecked(c) * x within one unit
// (the shift truncates toward -inf, the real product toward zero).
constexpr acc32_t apply_weight(acc32_t x, wcode_t c) {
  if (c == kCodeZero) return 0;
  acc32_t y = x >> (c & 3);
  if (c & 4) y = -y;
  return y;
}

// 3-bit packing, least-significant-bit first: bit b of code i lands on
// payload bit 3*i + b, and payload bit k is bit (k % 8) of byte k / 8.
// Trailing pad bits of the last byte are zero.
struct PackedWeights {
  std::size_t count = 0;          // number of codes
  std::vector<std::uint8_t> bytes;  // ceil(3 * count / 8) bytes
};

constexpr std::size_t packed_size(std::size_t count) {
  return (3 * count + 7) / 8;
}

// Throws std::invalid_argument if any code is invalid.
PackedWeights pack(std::span<const wcode_t> codes);

// Recovers the code sequence. Returns nullopt if the byte count does not
// match the declared count exactly, a pad bit is set, or any decoded code
// is invalid.
std::optional<std::vector<wcode_t>> unpack(const PackedWeights& packed);

}  // namespace egru
