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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egru/cells.hpp"
#include "egru/features.hpp"
#include "egru/fixedpoint.hpp"
#include "egru/quantizer.hpp"
#include "egru/rng.hpp"

namespace egru {

enum class CellKind : std::uint8_t {
  kEgru = 0,
  kGru = 1,
  kRnn = 2,
};

const char* cell_kind_name(CellKind kind);

// Fixed topology: input_bins -> recurrent[0] -> recurrent[1] -> dense (ReLU)
// -> classifier. Only the recurrent cell type varies.
struct ModelConfig {
  int input_bins = 64;
  std::array<int, 2> recurrent{30, 20};
  int dense = 16;
  int num_classes = 3;
  CellKind cell = CellKind::kEgru;

  bool operator==(const ModelConfig&) const = default;
};

// Flat parameter layout. All model parameters live in one contiguous vector
// ordered by these tensors; the same order is used on disk.
struct TensorInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t count = 0;
  int rows = 0;
  int cols = 0;  // 1 for bias vectors
};

std::vector<TensorInfo> model_layout(const ModelConfig& cfg);
std::size_t param_count(const ModelConfig& cfg);

// Glorot-uniform initialization: every tensor of a layer, biases included,
// draws from U(-r, r) with r = sqrt(6 / (fan_in + fan_out)).
std::vector<double> init_params(const ModelConfig& cfg, Rng& rng);

// Element-wise septenary projection of a flat parameter vector.
// Throws std::invalid_argument on non-finite values.
std::vector<wcode_t> quantize_params(std::span<const double> params);
std::vector<double> dequantize_params(std::span<const wcode_t> codes);

struct ForwardOptions {
  bool quantize_weights = false;  // septenary projection before use
  bool clip_unit_range = false;   // (-1, 1] pre-activation clip
};

struct FloatOutput {
  std::vector<double> logits;
  std::vector<double> probs;
};

// Runs the spectrogram through the float network, reading frames as Q15
// columns scaled to [0, 1). Softmax is computed in float; the Q15 path below
// never needs it.
FloatOutput forward_float(const ModelConfig& cfg, std::span<const double> params,
                          const Spectrogram& spec, const ForwardOptions& opt);

// Integer-only inference for the eGRU cell. Returns the predicted class
// (lowest index wins ties); logits_out, when given, receives the raw Acc32
// classifier accumulators. Rejects configs whose cell is not eGRU.
int forward_q15(const ModelConfig& cfg, std::span<const wcode_t> codes,
                const Spectrogram& spec, std::vector<acc32_t>* logits_out = nullptr);

int argmax_index(std::span<const double> v);
int argmax_index(std::span<const acc32_t> v);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace egru
