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

#include "egru/network.hpp"

#include <cmath>
#include <stdexcept>

#include "egru/errors.hpp"
#include "egru/netviews.hpp"

namespace egru {

const char* cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::kEgru: return "egru";
    case CellKind::kGru: return "gru";
    case CellKind::kRnn: return "rnn";
  }
  return "?";
}

std::vector<TensorInfo> model_layout(const ModelConfig& cfg) {
  std::vector<TensorInfo> tensors;
  std::size_t cursor = 0;
  auto add = [&](const std::string& name, int rows, int cols) {
    const auto count = static_cast<std::size_t>(rows) * cols;
    tensors.push_back({name, cursor, count, rows, cols});
    cursor += count;
  };
  auto add_recurrent = [&](const std::string& prefix, int in, int h) {
    const int width = h + in;
    switch (cfg.cell) {
      case CellKind::kEgru:
        add(prefix + ".wz", h, width);
        add(prefix + ".bz", h, 1);
        add(prefix + ".wh", h, width);
        add(prefix + ".bh", h, 1);
        break;
      case CellKind::kGru:
        add(prefix + ".wz", h, width);
        add(prefix + ".bz", h, 1);
        add(prefix + ".wr", h, width);
        add(prefix + ".br", h, 1);
        add(prefix + ".wh", h, width);
        add(prefix + ".bh", h, 1);
        break;
      case CellKind::kRnn:
        add(prefix + ".w", h, width);
        add(prefix + ".b", h, 1);
        break;
    }
  };
  add_recurrent("l1", cfg.input_bins, cfg.recurrent[0]);
  add_recurrent("l2", cfg.recurrent[0], cfg.recurrent[1]);
  add("dense.w", cfg.dense, cfg.recurrent[1]);
  add("dense.b", cfg.dense, 1);
  add("classifier.w", cfg.num_classes, cfg.dense);
  add("classifier.b", cfg.num_classes, 1);
  return tensors;
}

std::size_t param_count(const ModelConfig& cfg) {
  std::size_t total = 0;
  for (const auto& t : model_layout(cfg)) total += t.count;
  return total;
}

std::vector<double> init_params(const ModelConfig& cfg, Rng& rng) {
  const auto layout = model_layout(cfg);
  std::vector<double> params(param_count(cfg));
  double r = 0.0;
  for (const auto& t : layout) {
    // Bias vectors draw with the same radius as their layer's matrix, which
    // immediately precedes them in the layout.
    if (t.cols > 1) r = std::sqrt(6.0 / (t.rows + t.cols));
    for (std::size_t i = 0; i < t.count; ++i) {
      params[t.offset + i] = rng.uniform(-r, r);
    }
  }
  return params;
}

std::vector<wcode_t> quantize_params(std::span<const double> params) {
  std::vector<wcode_t> codes(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto c = quantize(params[i]);
    if (!c) throw std::invalid_argument("quantize_params: non-finite weight");
    codes[i] = *c;
  }
  return codes;
}

std::vector<double> dequantize_params(std::span<const wcode_t> codes) {
  std::vector<double> params(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (!is_valid_code(codes[i])) {
      throw std::invalid_argument("dequantize_params: invalid code");
    }
    params[i] = decode_unchecked(codes[i]);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

namespace {

template <typename Span>
Span slice(Span all, const TensorInfo& t) {
  return all.subspan(t.offset, t.count);
}

void check_param_size(const ModelConfig& cfg, std::size_t got) {
  if (got != param_count(cfg)) {
    throw std::invalid_argument("parameter vector does not match config");
  }
}

}  // namespace

EgruNetViews egru_views(const ModelConfig& cfg, std::span<const double> p) {
  check_param_size(cfg, p.size());
  const auto t = model_layout(cfg);
  EgruNetViews v;
  v.l1 = {cfg.input_bins, cfg.recurrent[0],
          slice(p, t[0]), slice(p, t[1]), slice(p, t[2]), slice(p, t[3])};
  v.l2 = {cfg.recurrent[0], cfg.recurrent[1],
          slice(p, t[4]), slice(p, t[5]), slice(p, t[6]), slice(p, t[7])};
  v.head = {slice(p, t[8]), slice(p, t[9]), slice(p, t[10]), slice(p, t[11])};
  return v;
}

GruNetViews gru_views(const ModelConfig& cfg, std::span<const double> p) {
  check_param_size(cfg, p.size());
  const auto t = model_layout(cfg);
  GruNetViews v;
  v.l1 = {cfg.input_bins, cfg.recurrent[0],
          slice(p, t[0]), slice(p, t[1]), slice(p, t[2]),
          slice(p, t[3]), slice(p, t[4]), slice(p, t[5])};
  v.l2 = {cfg.recurrent[0], cfg.recurrent[1],
          slice(p, t[6]), slice(p, t[7]), slice(p, t[8]),
          slice(p, t[9]), slice(p, t[10]), slice(p, t[11])};
  v.head = {slice(p, t[12]), slice(p, t[13]), slice(p, t[14]), slice(p, t[15])};
  return v;
}

RnnNetViews rnn_views(const ModelConfig& cfg, std::span<const double> p) {
  check_param_size(cfg, p.size());
  const auto t = model_layout(cfg);
  RnnNetViews v;
  v.l1 = {cfg.input_bins, cfg.recurrent[0], slice(p, t[0]), slice(p, t[1])};
  v.l2 = {cfg.recurrent[0], cfg.recurrent[1], slice(p, t[2]), slice(p, t[3])};
  v.head = {slice(p, t[4]), slice(p, t[5]), slice(p, t[6]), slice(p, t[7])};
  return v;
}

EgruNetGrads egru_grads(const ModelConfig& cfg, std::span<double> g) {
  check_param_size(cfg, g.size());
  const auto t = model_layout(cfg);
  EgruNetGrads v;
  v.l1 = {slice(g, t[0]), slice(g, t[1]), slice(g, t[2]), slice(g, t[3])};
  v.l2 = {slice(g, t[4]), slice(g, t[5]), slice(g, t[6]), slice(g, t[7])};
  v.head = {slice(g, t[8]), slice(g, t[9]), slice(g, t[10]), slice(g, t[11])};
  return v;
}

GruNetGrads gru_grads(const ModelConfig& cfg, std::span<double> g) {
  check_param_size(cfg, g.size());
  const auto t = model_layout(cfg);
  GruNetGrads v;
  v.l1 = {slice(g, t[0]), slice(g, t[1]), slice(g, t[2]),
          slice(g, t[3]), slice(g, t[4]), slice(g, t[5])};
  v.l2 = {slice(g, t[6]), slice(g, t[7]), slice(g, t[8]),
          slice(g, t[9]), slice(g, t[10]), slice(g, t[11])};
  v.head = {slice(g, t[12]), slice(g, t[13]), slice(g, t[14]), slice(g, t[15])};
  return v;
}

RnnNetGrads rnn_grads(const ModelConfig& cfg, std::span<double> g) {
  check_param_size(cfg, g.size());
  const auto t = model_layout(cfg);
  RnnNetGrads v;
  v.l1 = {slice(g, t[0]), slice(g, t[1])};
  v.l2 = {slice(g, t[2]), slice(g, t[3])};
  v.head = {slice(g, t[4]), slice(g, t[5]), slice(g, t[6]), slice(g, t[7])};
  return v;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

namespace {

void check_input(const ModelConfig& cfg, const Spectrogram& spec) {
  if (spec.bins != cfg.input_bins) {
    throw DataError("input has " + std::to_string(spec.bins) +
                    " bins, model expects " + std::to_string(cfg.input_bins));
  }
  if (spec.frames < 1) throw DataError("empty spectrogram");
}

std::vector<double> frame_real(const Spectrogram& spec, int t) {
  const auto f = spec.frame(t);
  std::vector<double> x(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) x[i] = q15_to_real(f[i]);
  return x;
}

}  // namespace

int argmax_index(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

int argmax_index(std::span<const acc32_t> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<double> softmax(std::span<const double> logits) {
  double max = logits[0];
  for (const double v : logits) max = std::max(max, v);
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max);
    sum += probs[i];
  }
  for (auto& p : probs) p /= sum;
  return probs;
}

FloatOutput forward_float(const ModelConfig& cfg, std::span<const double> params,
                          const Spectrogram& spec, const ForwardOptions& opt) {
  check_input(cfg, spec);
  check_param_size(cfg, params.size());

  std::vector<double> effective;
  if (opt.quantize_weights) {
    effective = dequantize_params(quantize_params(params));
    params = effective;
  }
  const bool clip = opt.clip_unit_range;

  const int h1n = cfg.recurrent[0], h2n = cfg.recurrent[1];
  std::vector<double> h1(h1n, 0.0), h2(h2n, 0.0);
  std::vector<double> h1next(h1n), h2next(h2n);

  auto run = [&](auto&& step1, auto&& step2) {
    for (int t = 0; t < spec.frames; ++t) {
      const std::vector<double> x = frame_real(spec, t);
      step1(x, h1, h1next);
      step2(h1next, h2, h2next);
      std::swap(h1, h1next);
      std::swap(h2, h2next);
    }
  };

  DenseViews head;
  switch (cfg.cell) {
    case CellKind::kEgru: {
      const auto v = egru_views(cfg, params);
      head = v.head;
      run([&](auto& x, auto& h, auto& out) {
            egru_step_forward(v.l1, x, h, out, clip, nullptr);
          },
          [&](auto& x, auto& h, auto& out) {
            egru_step_forward(v.l2, x, h, out, clip, nullptr);
          });
      break;
    }
    case CellKind::kGru: {
      const auto v = gru_views(cfg, params);
      head = v.head;
      run([&](auto& x, auto& h, auto& out) {
            gru_step_forward(v.l1, x, h, out, clip, nullptr);
          },
          [&](auto& x, auto& h, auto& out) {
            gru_step_forward(v.l2, x, h, out, clip, nullptr);
          });
      break;
    }
    case CellKind::kRnn: {
      const auto v = rnn_views(cfg, params);
      head = v.head;
      run([&](auto& x, auto& h, auto& out) {
            rnn_step_forward(v.l1, x, h, out, clip, nullptr);
          },
          [&](auto& x, auto& h, auto& out) {
            rnn_step_forward(v.l2, x, h, out, clip, nullptr);
          });
      break;
    }
  }

  // Dense ReLU head. The pre-activation obeys the same range constraint as
  // the recurrent layers; classifier logits are never clipped.
  std::vector<double> hd(cfg.dense);
  for (int d = 0; d < cfg.dense; ++d) {
    double a = 0.0;
    for (int i = 0; i < h2n; ++i) a += head.w[d * h2n + i] * h2[i];
    a += head.b[d];
    if (clip) a = clip_unit(a);
    hd[d] = a > 0.0 ? a : 0.0;
  }
  FloatOutput out;
  out.logits.resize(cfg.num_classes);
  for (int c = 0; c < cfg.num_classes; ++c) {
    double a = 0.0;
    for (int i = 0; i < cfg.dense; ++i) a += head.cw[c * cfg.dense + i] * hd[i];
    out.logits[c] = a + head.cb[c];
  }
  out.probs = softmax(out.logits);
  return out;
}

int forward_q15(const ModelConfig& cfg, std::span<const wcode_t> codes,
                const Spectrogram& spec, std::vector<acc32_t>* logits_out) {
  if (cfg.cell != CellKind::kEgru) {
    throw ModelError(ModelError::Kind::kUnsupported,
                     "integer inference supports only the egru cell");
  }
  check_input(cfg, spec);
  if (codes.size() != param_count(cfg)) {
    throw ModelError(ModelError::Kind::kBadLength,
                     "code vector does not match config");
  }

  const auto t = model_layout(cfg);
  const auto bz1 = decode_bias_codes(codes.subspan(t[1].offset, t[1].count));
  const auto bh1 = decode_bias_codes(codes.subspan(t[3].offset, t[3].count));
  const auto bz2 = decode_bias_codes(codes.subspan(t[5].offset, t[5].count));
  const auto bh2 = decode_bias_codes(codes.subspan(t[7].offset, t[7].count));
  const EgruLayerQView l1{cfg.input_bins, cfg.recurrent[0],
                          codes.subspan(t[0].offset, t[0].count),
                          codes.subspan(t[2].offset, t[2].count), bz1, bh1};
  const EgruLayerQView l2{cfg.recurrent[0], cfg.recurrent[1],
                          codes.subspan(t[4].offset, t[4].count),
                          codes.subspan(t[6].offset, t[6].count), bz2, bh2};
  const auto dw = codes.subspan(t[8].offset, t[8].count);
  const auto db = decode_bias_codes(codes.subspan(t[9].offset, t[9].count));
  const auto cw = codes.subspan(t[10].offset, t[10].count);
  const auto cb = decode_bias_codes(codes.subspan(t[11].offset, t[11].count));

  const int h1n = cfg.recurrent[0], h2n = cfg.recurrent[1];
  std::vector<q15_t> h1(h1n, 0), h2(h2n, 0), h1next(h1n), h2next(h2n);
  for (int ti = 0; ti < spec.frames; ++ti) {
    egru_step_q15(l1, spec.frame(ti), h1, h1next);
    egru_step_q15(l2, h1next, h2, h2next);
    std::swap(h1, h1next);
    std::swap(h2, h2next);
  }

  // Dense ReLU head: accumulate, saturate into Q15, rectify.
  std::vector<q15_t> hd(cfg.dense);
  for (int d = 0; d < cfg.dense; ++d) {
    acc32_t a = 0;
    for (int i = 0; i < h2n; ++i) a += apply_weight(h2[i], dw[d * h2n + i]);
    a += db[d];
    hd[d] = relu_q15(sat_q15(a));
  }
  // Classifier logits stay in the accumulator; |logit| is bounded by the
  // dense width so no clipping is required before the argmax.
  std::vector<acc32_t> logits(cfg.num_classes);
  for (int c = 0; c < cfg.num_classes; ++c) {
    acc32_t a = 0;
    for (int i = 0; i < cfg.dense; ++i) a += apply_weight(hd[i], cw[c * cfg.dense + i]);
    logits[c] = a + cb[c];
  }
  if (logits_out) *logits_out = logits;
  return argmax_index(std::span<const acc32_t>(logits));
}

}  // namespace egru
