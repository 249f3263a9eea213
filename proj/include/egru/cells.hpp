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
#include <span>
#include <vector>

#include "egru/fixedpoint.hpp"
#include "egru/quantizer.hpp"

namespace egru {

// Recurrent weight matrices are row-major with one row per hidden unit and
// columns ordered [recurrent state (hidden_size) | input (input_size)], so a
// row dots the concatenation [h_prev, x].

// ---------------------------------------------------------------------------
// Float cells (training).
// ---------------------------------------------------------------------------

struct EgruLayerView {
  int input_size = 0;
  int hidden_size = 0;
  std::span<const double> wz, bz, wh, bh;
};

struct GruLayerView {
  int input_size = 0;
  int hidden_size = 0;
  std::span<const double> wz, bz, wr, br, wh, bh;
};

struct RnnLayerView {
  int input_size = 0;
  int hidden_size = 0;
  std::span<const double> w, b;
};

struct EgruLayerGrads {
  std::span<double> wz, bz, wh, bh;
};
struct GruLayerGrads {
  std::span<double> wz, bz, wr, br, wh, bh;
};
struct RnnLayerGrads {
  std::span<double> w, b;
};

inline double softsign_real(double v) { return v / (1.0 + std::fabs(v)); }
inline double softsign_real_grad(double v) {
  const double d = 1.0 + std::fabs(v);
  return 1.0 / (d * d);
}
inline double sigmoid_real(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Training-time range constraint for pre-activations: values clamp to
// (-1, 1] and the gradient passes only where the input already lies inside.
inline double clip_unit(double v) { return std::clamp(v, -1.0, 1.0); }
inline bool clip_unit_inside(double v) { return v > -1.0 && v <= 1.0; }

// Step caches hold what the matching backward needs: pre-clip
// pre-activations plus the activations themselves.
struct EgruStepCache {
  std::vector<double> az, ah, z, cand;
};
struct GruStepCache {
  std::vector<double> az, ar, ah, z, r, cand;
};
struct RnnStepCache {
  std::vector<double> a;
};

// One recurrent step. h_out must not alias h_prev. When clip is set,
// pre-activations pass through clip_unit before the activation.
void egru_step_forward(const EgruLayerView& p, std::span<const double> x,
                       std::span<const double> h_prev, std::span<double> h_out,
                       bool clip, EgruStepCache* cache);
void gru_step_forward(const GruLayerView& p, std::span<const double> x,
                      std::span<const double> h_prev, std::span<double> h_out,
                      bool clip, GruStepCache* cache);
void rnn_step_forward(const RnnLayerView& p, std::span<const double> x,
                      std::span<const double> h_prev, std::span<double> h_out,
                      bool clip, RnnStepCache* cache);

// Reverse-mode step. dh is the loss gradient at h_out; contributions are
// accumulated (+=) into dh_prev, dx and the parameter gradients. The layer
// view must hold the weights the forward pass actually used; with
// straight-through quantization those are the quantized weights while the
// gradient slots belong to the full-precision master copy.
void egru_step_backward(const EgruLayerView& p, std::span<const double> x,
                        std::span<const double> h_prev,
                        const EgruStepCache& cache, std::span<const double> dh,
                        std::span<double> dh_prev, std::span<double> dx,
                        const EgruLayerGrads& grads, bool clip);
void gru_step_backward(const GruLayerView& p, std::span<const double> x,
                       std::span<const double> h_prev,
                       const GruStepCache& cache, std::span<const double> dh,
                       std::span<double> dh_prev, std::span<double> dx,
                       const GruLayerGrads& grads, bool clip);
void rnn_step_backward(const RnnLayerView& p, std::span<const double> x,
                       std::span<const double> h_prev,
                       const RnnStepCache& cache, std::span<const double> dh,
                       std::span<double> dh_prev, std::span<double> dx,
                       const RnnLayerGrads& grads, bool clip);

// Convenience steps matching the deployment semantics switch: with
// quantize_in_forward set, every weight and bias is replaced by its septenary
// level and pre-activations are clipped to the unit range.
void egru_step_float(const EgruLayerView& p, std::span<const double> x,
                     std::span<const double> h_prev, std::span<double> h_out,
                     bool quantize_in_forward);
void gru_step_float(const GruLayerView& p, std::span<const double> x,
                    std::span<const double> h_prev, std::span<double> h_out,
                    bool quantize_in_forward);
void rnn_step_float(const RnnLayerView& p, std::span<const double> x,
                    std::span<const double> h_prev, std::span<double> h_out,
                    bool quantize_in_forward);

// ---------------------------------------------------------------------------
// Q15 cell (deployment).
// ---------------------------------------------------------------------------

// Same layout as the float view, with 3-bit codes for the matrices. Biases
// arrive pre-applied to the Q15 one (apply_weight(32767, code)) so the step
// only adds them; decode_bias_codes builds that vector once per model.
struct EgruLayerQView {
  int input_size = 0;
  int hidden_size = 0;
  std::span<const wcode_t> wz, wh;
  std::span<const q15_t> bz, bh;
};

std::vector<q15_t> decode_bias_codes(std::span<const wcode_t> codes);

// Integer-only step: shift-accumulate both pre-activations, clip to the
// accumulator range, activate, then blend h_prev toward the candidate as
// h_prev + (z * (cand - h_prev)) >> 15. h_out must not alias h_prev.
void egru_step_q15(const EgruLayerQView& p, std::span<const q15_t> x,
                   std::span<const q15_t> h_prev, std::span<q15_t> h_out);

}  // namespace egru
