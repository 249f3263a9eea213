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

#include "egru/cells.hpp"

#include <cassert>
#include <stdexcept>

namespace egru {

namespace {

// Row r of a [h_prev | x] matrix dotted with the current state and input,
// plus bias. Accumulation order (state terms, input terms, bias) mirrors the
// Q15 kernel so the two paths are term-for-term comparable.
double affine_row(std::span<const double> w, std::span<const double> b, int row,
                  std::span<const double> h_prev, std::span<const double> x) {
  const std::size_t width = h_prev.size() + x.size();
  const double* wr = w.data() + row * width;
  double acc = 0.0;
  for (std::size_t i = 0; i < h_prev.size(); ++i) acc += wr[i] * h_prev[i];
  for (std::size_t i = 0; i < x.size(); ++i) acc += wr[h_prev.size() + i] * x[i];
  return acc + b[row];
}

// Backward of affine_row: given da for one row, accumulate weight gradients
// and scatter input gradients through the forward weights.
void affine_row_backward(std::span<const double> w, int row, double da,
                         std::span<const double> h_prev,
                         std::span<const double> x, std::span<double> dw,
                         std::span<double> db, std::span<double> dh_prev,
                         std::span<double> dx) {
  const std::size_t width = h_prev.size() + x.size();
  const double* wr = w.data() + row * width;
  double* dwr = dw.data() + row * width;
  for (std::size_t i = 0; i < h_prev.size(); ++i) {
    dwr[i] += da * h_prev[i];
    dh_prev[i] += da * wr[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    dwr[h_prev.size() + i] += da * x[i];
    dx[i] += da * wr[h_prev.size() + i];
  }
  db[row] += da;
}

void check_shapes(int input_size, int hidden_size, std::size_t x,
                  std::size_t h_prev, std::size_t h_out) {
  if (static_cast<int>(x) != input_size ||
      static_cast<int>(h_prev) != hidden_size ||
      static_cast<int>(h_out) != hidden_size) {
    throw std::invalid_argument("recurrent step: shape mismatch");
  }
}

std::vector<double> quantized_copy(std::span<const double> w) {
  std::vector<double> q(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto c = quantize(w[i]);
    if (!c) throw std::invalid_argument("quantize: non-finite weight");
    q[i] = decode_unchecked(*c);
  }
  return q;
}

}  // namespace

// ---------------------------------------------------------------------------
// eGRU
// ---------------------------------------------------------------------------

void egru_step_forward(const EgruLayerView& p, std::span<const double> x,
                       std::span<const double> h_prev, std::span<double> h_out,
                       bool clip, EgruStepCache* cache) {
  check_shapes(p.input_size, p.hidden_size, x.size(), h_prev.size(), h_out.size());
  const int h = p.hidden_size;
  if (cache) {
    cache->az.resize(h);
    cache->ah.resize(h);
    cache->z.resize(h);
    cache->cand.resize(h);
  }
  for (int j = 0; j < h; ++j) {
    const double az = affine_row(p.wz, p.bz, j, h_prev, x);
    const double ah = affine_row(p.wh, p.bh, j, h_prev, x);
    const double azc = clip ? clip_unit(az) : az;
    const double ahc = clip ? clip_unit(ah) : ah;
    const double z = 0.5 * (softsign_real(azc) + 1.0);
    const double cand = softsign_real(ahc);
    h_out[j] = (1.0 - z) * h_prev[j] + z * cand;
    if (cache) {
      cache->az[j] = az;
      cache->ah[j] = ah;
      cache->z[j] = z;
      cache->cand[j] = cand;
    }
  }
}

void egru_step_backward(const EgruLayerView& p, std::span<const double> x,
                        std::span<const double> h_prev,
                        const EgruStepCache& cache, std::span<const double> dh,
                        std::span<double> dh_prev, std::span<double> dx,
                        const EgruLayerGrads& grads, bool clip) {
  const int h = p.hidden_size;
  for (int j = 0; j < h; ++j) {
    const double z = cache.z[j];
    const double cand = cache.cand[j];
    const double dz = dh[j] * (cand - h_prev[j]);
    const double dcand = dh[j] * z;
    dh_prev[j] += dh[j] * (1.0 - z);

    const double ahc = clip ? clip_unit(cache.ah[j]) : cache.ah[j];
    const double azc = clip ? clip_unit(cache.az[j]) : cache.az[j];
    double dah = dcand * softsign_real_grad(ahc);
    double daz = dz * 0.5 * softsign_real_grad(azc);
    if (clip) {
      if (!clip_unit_inside(cache.ah[j])) dah = 0.0;
      if (!clip_unit_inside(cache.az[j])) daz = 0.0;
    }
    affine_row_backward(p.wz, j, daz, h_prev, x, grads.wz, grads.bz, dh_prev, dx);
    affine_row_backward(p.wh, j, dah, h_prev, x, grads.wh, grads.bh, dh_prev, dx);
  }
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

void gru_step_forward(const GruLayerView& p, std::span<const double> x,
                      std::span<const double> h_prev, std::span<double> h_out,
                      bool clip, GruStepCache* cache) {
  check_shapes(p.input_size, p.hidden_size, x.size(), h_prev.size(), h_out.size());
  const int h = p.hidden_size;
  if (cache) {
    cache->az.resize(h);
    cache->ar.resize(h);
    cache->ah.resize(h);
    cache->z.resize(h);
    cache->r.resize(h);
    cache->cand.resize(h);
  }
  // Gates first; the candidate row uses the reset-scaled state.
  std::vector<double> z(h), r(h);
  for (int j = 0; j < h; ++j) {
    const double az = affine_row(p.wz, p.bz, j, h_prev, x);
    const double ar = affine_row(p.wr, p.br, j, h_prev, x);
    const double azc = clip ? clip_unit(az) : az;
    const double arc = clip ? clip_unit(ar) : ar;
    z[j] = sigmoid_real(azc);
    r[j] = sigmoid_real(arc);
    if (cache) {
      cache->az[j] = az;
      cache->ar[j] = ar;
    }
  }
  std::vector<double> rh(h);
  for (int j = 0; j < h; ++j) rh[j] = r[j] * h_prev[j];
  for (int j = 0; j < h; ++j) {
    const double ah = affine_row(p.wh, p.bh, j, rh, x);
    const double ahc = clip ? clip_unit(ah) : ah;
    const double cand = std::tanh(ahc);
    h_out[j] = (1.0 - z[j]) * h_prev[j] + z[j] * cand;
    if (cache) {
      cache->ah[j] = ah;
      cache->z[j] = z[j];
      cache->r[j] = r[j];
      cache->cand[j] = cand;
    }
  }
}

void gru_step_backward(const GruLayerView& p, std::span<const double> x,
                       std::span<const double> h_prev,
                       const GruStepCache& cache, std::span<const double> dh,
                       std::span<double> dh_prev, std::span<double> dx,
                       const GruLayerGrads& grads, bool clip) {
  const int h = p.hidden_size;
  std::vector<double> rh(h), drh(h, 0.0);
  for (int j = 0; j < h; ++j) rh[j] = cache.r[j] * h_prev[j];

  // Candidate rows first: they populate drh, which feeds the reset gate.
  for (int j = 0; j < h; ++j) {
    const double z = cache.z[j];
    const double cand = cache.cand[j];
    const double dcand = dh[j] * z;
    dh_prev[j] += dh[j] * (1.0 - z);

    double dah = dcand * (1.0 - cand * cand);
    if (clip && !clip_unit_inside(cache.ah[j])) dah = 0.0;
    affine_row_backward(p.wh, j, dah, rh, x, grads.wh, grads.bh, drh, dx);
  }
  for (int j = 0; j < h; ++j) {
    const double z = cache.z[j];
    const double r = cache.r[j];
    const double dz = dh[j] * (cache.cand[j] - h_prev[j]);
    const double dr = drh[j] * h_prev[j];
    dh_prev[j] += drh[j] * r;

    double daz = dz * z * (1.0 - z);
    double dar = dr * r * (1.0 - r);
    if (clip) {
      if (!clip_unit_inside(cache.az[j])) daz = 0.0;
      if (!clip_unit_inside(cache.ar[j])) dar = 0.0;
    }
    affine_row_backward(p.wz, j, daz, h_prev, x, grads.wz, grads.bz, dh_prev, dx);
    affine_row_backward(p.wr, j, dar, h_prev, x, grads.wr, grads.br, dh_prev, dx);
  }
}

// ---------------------------------------------------------------------------
// Plain RNN
// ---------------------------------------------------------------------------

void rnn_step_forward(const RnnLayerView& p, std::span<const double> x,
                      std::span<const double> h_prev, std::span<double> h_out,
                      bool clip, RnnStepCache* cache) {
  check_shapes(p.input_size, p.hidden_size, x.size(), h_prev.size(), h_out.size());
  const int h = p.hidden_size;
  if (cache) cache->a.resize(h);
  for (int j = 0; j < h; ++j) {
    const double a = affine_row(p.w, p.b, j, h_prev, x);
    const double ac = clip ? clip_unit(a) : a;
    h_out[j] = std::tanh(ac);
    if (cache) cache->a[j] = a;
  }
}

void rnn_step_backward(const RnnLayerView& p, std::span<const double> x,
                       std::span<const double> h_prev,
                       const RnnStepCache& cache, std::span<const double> dh,
                       std::span<double> dh_prev, std::span<double> dx,
                       const RnnLayerGrads& grads, bool clip) {
  const int h = p.hidden_size;
  for (int j = 0; j < h; ++j) {
    const double ac = clip ? clip_unit(cache.a[j]) : cache.a[j];
    const double t = std::tanh(ac);
    double da = dh[j] * (1.0 - t * t);
    if (clip && !clip_unit_inside(cache.a[j])) da = 0.0;
    affine_row_backward(p.w, j, da, h_prev, x, grads.w, grads.b, dh_prev, dx);
  }
}

// ---------------------------------------------------------------------------
// quantize-in-forward wrappers
// ---------------------------------------------------------------------------

void egru_step_float(const EgruLayerView& p, std::span<const double> x,
                     std::span<const double> h_prev, std::span<double> h_out,
                     bool quantize_in_forward) {
  if (!quantize_in_forward) {
    egru_step_forward(p, x, h_prev, h_out, false, nullptr);
    return;
  }
  const auto wz = quantized_copy(p.wz), bz = quantized_copy(p.bz);
  const auto wh = quantized_copy(p.wh), bh = quantized_copy(p.bh);
  const EgruLayerView q{p.input_size, p.hidden_size, wz, bz, wh, bh};
  egru_step_forward(q, x, h_prev, h_out, true, nullptr);
}

void gru_step_float(const GruLayerView& p, std::span<const double> x,
                    std::span<const double> h_prev, std::span<double> h_out,
                    bool quantize_in_forward) {
  if (!quantize_in_forward) {
    gru_step_forward(p, x, h_prev, h_out, false, nullptr);
    return;
  }
  const auto wz = quantized_copy(p.wz), bz = quantized_copy(p.bz);
  const auto wr = quantized_copy(p.wr), br = quantized_copy(p.br);
  const auto wh = quantized_copy(p.wh), bh = quantized_copy(p.bh);
  const GruLayerView q{p.input_size, p.hidden_size, wz, bz, wr, br, wh, bh};
  gru_step_forward(q, x, h_prev, h_out, true, nullptr);
}

void rnn_step_float(const RnnLayerView& p, std::span<const double> x,
                    std::span<const double> h_prev, std::span<double> h_out,
                    bool quantize_in_forward) {
  if (!quantize_in_forward) {
    rnn_step_forward(p, x, h_prev, h_out, false, nullptr);
    return;
  }
  const auto w = quantized_copy(p.w), b = quantized_copy(p.b);
  const RnnLayerView q{p.input_size, p.hidden_size, w, b};
  rnn_step_forward(q, x, h_prev, h_out, true, nullptr);
}

// ---------------------------------------------------------------------------
// Q15 eGRU
// ---------------------------------------------------------------------------

std::vector<q15_t> decode_bias_codes(std::span<const wcode_t> codes) {
  std::vector<q15_t> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out[i] = static_cast<q15_t>(apply_weight(kQ15Max, codes[i]));
  }
  return out;
}

void egru_step_q15(const EgruLayerQView& p, std::span<const q15_t> x,
                   std::span<const q15_t> h_prev, std::span<q15_t> h_out) {
  check_shapes(p.input_size, p.hidden_size,
               x.size(), h_prev.size(), h_out.size());
  const int h = p.hidden_size;
  const int n = p.input_size;
  const int width = h + n;
  for (int j = 0; j < h; ++j) {
    const wcode_t* rz = p.wz.data() + static_cast<std::size_t>(j) * width;
    const wcode_t* rh = p.wh.data() + static_cast<std::size_t>(j) * width;
    acc32_t az = 0, ah = 0;
    for (int i = 0; i < h; ++i) az += apply_weight(h_prev[i], rz[i]);
    for (int i = 0; i < n; ++i) az += apply_weight(x[i], rz[h + i]);
    az += p.bz[j];
    for (int i = 0; i < h; ++i) ah += apply_weight(h_prev[i], rh[i]);
    for (int i = 0; i < n; ++i) ah += apply_weight(x[i], rh[h + i]);
    ah += p.bh[j];

    const q15_t z = gate_softsign_q15(clip_acc(az));
    const q15_t cand = softsign_q15(clip_acc(ah));
    // Difference form of (1-z)*h + z*cand: one multiply per unit. The
    // product is at most 32767 * 65535 and fits in 32 bits; the blend of two
    // Q15 values cannot leave Q15.
    const acc32_t delta = static_cast<acc32_t>(cand) - h_prev[j];
    const acc32_t blended = h_prev[j] + ((static_cast<acc32_t>(z) * delta) >> 15);
    assert(blended >= kQ15Min && blended <= kQ15Max);
    h_out[j] = static_cast<q15_t>(blended);
  }
}

}  // namespace egru
