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

#include "egru/quantizer.hpp"

#include <cmath>
#include <stdexcept>

namespace egru {

namespace {

// round(x) with ties to even, independent of the floating point environment.
long round_half_even(double x) {
  const double fl = std::floor(x);
  const double frac = x - fl;
  const long lo = static_cast<long>(fl);
  if (frac > 0.5) return lo + 1;
  if (frac < 0.5) return lo;
  return (lo % 2 == 0) ? lo : lo + 1;
}

}  // namespace

std::optional<wcode_t> quantize(double w) {
  if (!std::isfinite(w)) return std::nullopt;
  if (w >= 1.0) return wcode_t{0};
  if (w <= -1.0) return wcode_t{4};
  if (std::fabs(w) <= 0.25) return kCodeZero;
  // 0.25 < |w| < 1, so round(log2 |w|) is 0, -1 or -2.
  const long e = round_half_even(std::log2(std::fabs(w)));
  const auto mag_code = static_cast<wcode_t>(-e);  // 0 -> 1.0, 1 -> 0.5, 2 -> 0.25
  return w < 0.0 ? static_cast<wcode_t>(mag_code | 4) : mag_code;
}

std::optional<wcode_t> encode_level(double level) {
  for (wcode_t c = 0; c < 8; ++c) {
    if (is_valid_code(c) && decode_unchecked(c) == level) return c;
  }
  return std::nullopt;
}

PackedWeights pack(std::span<const wcode_t> codes) {
  PackedWeights out;
  out.count = codes.size();
  out.bytes.assign(packed_size(codes.size()), 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const wcode_t c = codes[i];
    if (!is_valid_code(c)) {
      throw std::invalid_argument("pack: invalid weight code");
    }
    for (int b = 0; b < 3; ++b) {
      if (c & (1u << b)) {
        const std::size_t k = 3 * i + b;
        out.bytes[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
      }
    }
  }
  return out;
}

std::optional<std::vector<wcode_t>> unpack(const PackedWeights& packed) {
  if (packed.bytes.size() != packed_size(packed.count)) return std::nullopt;
  std::vector<wcode_t> codes(packed.count);
  for (std::size_t i = 0; i < packed.count; ++i) {
    wcode_t c = 0;
    for (int b = 0; b < 3; ++b) {
      const std::size_t k = 3 * i + b;
      if (packed.bytes[k / 8] & (1u << (k % 8))) c |= static_cast<wcode_t>(1u << b);
    }
    if (!is_valid_code(c)) return std::nullopt;
    codes[i] = c;
  }
  // Pad bits beyond 3 * count must be zero.
  for (std::size_t k = 3 * packed.count; k < 8 * packed.bytes.size(); ++k) {
    if (packed.bytes[k / 8] & (1u << (k % 8))) return std::nullopt;
  }
  return codes;
}

}  // namespace egru
