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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "egru/errors.hpp"
#include "egru/network.hpp"
#include "egru/rng.hpp"

using namespace egru;

namespace {

ModelConfig cough_config() {
  ModelConfig cfg;
  cfg.cell = CellKind::kEgru;
  cfg.input_bins = 64;
  cfg.recurrent = {30, 20};
  cfg.dense = 16;
  cfg.num_classes = 3;
  return cfg;
}

ModelConfig tiny_config(CellKind cell) {
  ModelConfig cfg;
  cfg.cell = cell;
  cfg.input_bins = 5;
  cfg.recurrent = {4, 3};
  cfg.dense = 3;
  cfg.num_classes = 3;
  return cfg;
}

Spectrogram random_spec(int bins, int frames, std::uint64_t seed) {
  Spectrogram s;
  s.bins = bins;
  s.frames = frames;
  s.values.resize(static_cast<std::size_t>(bins) * frames);
  Rng rng(seed);
  for (auto& v : s.values) v = static_cast<q15_t>(rng.below(32768));
  return s;
}

// Expected parameter totals computed from first principles.
std::size_t expected_params(const ModelConfig& cfg) {
  const std::size_t mats =
      cfg.cell == CellKind::kGru ? 3 : (cfg.cell == CellKind::kEgru ? 2 : 1);
  const std::size_t l1 =
      mats * (static_cast<std::size_t>(cfg.recurrent[0]) *
                  (cfg.recurrent[0] + cfg.input_bins) +
              cfg.recurrent[0]);
  const std::size_t l2 =
      mats * (static_cast<std::size_t>(cfg.recurrent[1]) *
                  (cfg.recurrent[1] + cfg.recurrent[0]) +
              cfg.recurrent[1]);
  const std::size_t head = static_cast<std::size_t>(cfg.dense) * cfg.recurrent[1] +
                           cfg.dense +
                           static_cast<std::size_t>(cfg.num_classes) * cfg.dense +
                           cfg.num_classes;
  return l1 + l2 + head;
}

}  // namespace

TEST_CASE("parameter counts and layout") {
  ModelConfig cfg = cough_config();
  CHECK(param_count(cfg) == 8127);
  CHECK(param_count(cfg) == expected_params(cfg));

  cfg.cell = CellKind::kGru;
  CHECK(param_count(cfg) == expected_params(cfg));
  cfg.cell = CellKind::kRnn;
  CHECK(param_count(cfg) == expected_params(cfg));

  for (CellKind cell : {CellKind::kEgru, CellKind::kGru, CellKind::kRnn}) {
    ModelConfig c = cough_config();
    c.cell = cell;
    const auto layout = model_layout(c);
    std::size_t sum = 0;
    std::size_t expect_offset = 0;
    for (const TensorInfo& t : layout) {
      CHECK(t.offset == expect_offset);
      CHECK(t.count == static_cast<std::size_t>(t.rows) * t.cols);
      expect_offset += t.count;
      sum += t.count;
    }
    CHECK(sum == param_count(c));
  }
}

TEST_CASE("initialization is bounded and deterministic") {
  const ModelConfig cfg = cough_config();
  Rng a(7), b(7), c(8);
  const auto pa = init_params(cfg, a);
  const auto pb = init_params(cfg, b);
  const auto pc = init_params(cfg, c);
  REQUIRE(pa.size() == param_count(cfg));
  CHECK(pa == pb);
  CHECK(pa != pc);

  int nonzero = 0;
  for (const double v : pa) {
    CHECK(std::fabs(v) <= 1.0);
    if (v != 0.0) ++nonzero;
  }
  CHECK(nonzero > static_cast<int>(pa.size() / 2));
}

TEST_CASE("zero parameters give a uniform posterior") {
  const ModelConfig cfg = tiny_config(CellKind::kEgru);
  const std::vector<double> params(param_count(cfg), 0.0);
  const Spectrogram spec = random_spec(cfg.input_bins, 6, 42);
  const FloatOutput out = forward_float(cfg, params, spec, {false, false});
  CHECK(argmax_index(std::span<const double>(out.logits)) == 0);
  for (int c = 0; c < cfg.num_classes; ++c) {
    CHECK(out.logits[c] == 0.0);
    CHECK(out.probs[c] == doctest::Approx(1.0 / cfg.num_classes));
  }
}

TEST_CASE("permuting classifier rows permutes the posterior") {
  const ModelConfig cfg = tiny_config(CellKind::kEgru);
  Rng rng(3);
  std::vector<double> params = init_params(cfg, rng);
  const Spectrogram spec = random_spec(cfg.input_bins, 6, 9);

  const FloatOutput base = forward_float(cfg, params, spec, {false, false});

  // Swap classifier rows 0 and 1 (weights and biases are the last tensors).
  const auto layout = model_layout(cfg);
  const TensorInfo& cw = layout[layout.size() - 2];
  const TensorInfo& cb = layout[layout.size() - 1];
  REQUIRE(cw.rows == cfg.num_classes);
  for (int j = 0; j < cw.cols; ++j) {
    std::swap(params[cw.offset + j], params[cw.offset + cw.cols + j]);
  }
  std::swap(params[cb.offset], params[cb.offset + 1]);

  const FloatOutput perm = forward_float(cfg, params, spec, {false, false});
  CHECK(perm.logits[0] == doctest::Approx(base.logits[1]).epsilon(1e-12));
  CHECK(perm.logits[1] == doctest::Approx(base.logits[0]).epsilon(1e-12));
  CHECK(perm.logits[2] == doctest::Approx(base.logits[2]).epsilon(1e-12));
  CHECK(perm.probs[0] == doctest::Approx(base.probs[1]).epsilon(1e-10));
  CHECK(perm.probs[1] == doctest::Approx(base.probs[0]).epsilon(1e-10));
}

TEST_CASE("single-frame input works") {
  for (CellKind cell : {CellKind::kEgru, CellKind::kGru, CellKind::kRnn}) {
    const ModelConfig cfg = tiny_config(cell);
    Rng rng(4);
    const auto params = init_params(cfg, rng);
    const Spectrogram spec = random_spec(cfg.input_bins, 1, 10);
    const FloatOutput out = forward_float(cfg, params, spec, {false, false});
    const int pred = argmax_index(std::span<const double>(out.logits));
    CHECK(pred >= 0);
    CHECK(pred < cfg.num_classes);
    double sum = 0.0;
    for (double p : out.probs) sum += p;
    CHECK(sum == doctest::Approx(1.0));
  }
}

// Septenary nets drawn inside the envelope the integer path is specified
// for: dense rows with |w|_1 + |b| <= 1 so the Q15 saturation at the dense
// output never engages (the float twin does not saturate there). Recurrent
// tensors stay fully random.
std::vector<wcode_t> envelope_net(const ModelConfig& cfg, Rng& rng) {
  const auto layout = model_layout(cfg);
  std::vector<wcode_t> codes(param_count(cfg), kCodeZero);
  constexpr wcode_t kAll[7] = {0, 1, 2, 7, 6, 5, 4};
  constexpr wcode_t kQuarter[2] = {2, 6};
  for (std::size_t ti = 0; ti < layout.size(); ++ti) {
    const TensorInfo& t = layout[ti];
    if (ti == 8) {  // dense.w: three +-1/4 entries per row
      for (int r = 0; r < t.rows; ++r) {
        for (int k = 0; k < 3; ++k) {
          codes[t.offset + static_cast<std::size_t>(r) * t.cols +
                rng.below(t.cols)] = kQuarter[rng.below(2)];
        }
      }
    } else if (ti == 9) {  // dense.b: 0 or +-1/4
      for (std::size_t i = 0; i < t.count; ++i) {
        const wcode_t lv[3] = {kCodeZero, 2, 6};
        codes[t.offset + i] = lv[rng.below(3)];
      }
    } else {
      for (std::size_t i = 0; i < t.count; ++i) {
        codes[t.offset + i] = kAll[rng.below(7)];
      }
    }
  }
  return codes;
}

TEST_CASE("integer forward agrees with the float forward on septenary nets") {
  const ModelConfig cfg = tiny_config(CellKind::kEgru);
  Rng rng(12);
  int pred_mismatch = 0;
  double max_gap = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto codes = envelope_net(cfg, rng);
    const auto fparams = dequantize_params(codes);
    const Spectrogram spec = random_spec(cfg.input_bins, 8, 1000 + trial);

    const FloatOutput fo = forward_float(cfg, fparams, spec, {false, false});
    const int fpred = argmax_index(std::span<const double>(fo.logits));

    std::vector<acc32_t> qlog;
    const int qpred = forward_q15(cfg, codes, spec, &qlog);
    REQUIRE(qlog.size() == static_cast<std::size_t>(cfg.num_classes));

    double best = -1e9, second = -1e9;
    for (int c = 0; c < cfg.num_classes; ++c) {
      max_gap = std::max(max_gap, std::fabs(acc_to_real(qlog[c]) - fo.logits[c]));
      if (fo.logits[c] > best) {
        second = best;
        best = fo.logits[c];
      } else {
        second = std::max(second, fo.logits[c]);
      }
    }
    // Predictions must agree whenever the float margin clears the
    // integer rounding noise.
    if (best - second > 0.02 && fpred != qpred) ++pred_mismatch;
  }
  INFO("max logit gap ", max_gap);
  CHECK(max_gap < 0.02);
  CHECK(pred_mismatch == 0);
}

TEST_CASE("integer forward validates its inputs") {
  const ModelConfig egru = tiny_config(CellKind::kEgru);
  Rng rng(5);
  const auto params = init_params(egru, rng);
  auto codes = quantize_params(params);
  const Spectrogram spec = random_spec(egru.input_bins, 4, 2);

  ModelConfig gru = egru;
  gru.cell = CellKind::kGru;
  try {
    forward_q15(gru, codes, spec);
    CHECK(false);
  } catch (const ModelError& e) {
    CHECK(e.kind() == ModelError::Kind::kUnsupported);
  }

  codes.pop_back();
  try {
    forward_q15(egru, codes, spec);
    CHECK(false);
  } catch (const ModelError& e) {
    CHECK(e.kind() == ModelError::Kind::kBadLength);
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  const std::vector<double> d = {1.0, 3.0, 3.0};
  CHECK(argmax_index(std::span<const double>(d)) == 1);
  const std::vector<acc32_t> a = {7, 7, -1};
  CHECK(argmax_index(std::span<const acc32_t>(a)) == 0);
}

TEST_CASE("softmax is shift invariant and normalized") {
  const std::vector<double> logits = {0.3, -1.2, 2.5, 0.0};
  const auto p1 = softmax(logits);
  std::vector<double> shifted = logits;
  for (auto& v : shifted) v += 300.0;
  const auto p2 = softmax(shifted);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-12));
    sum += p1[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cell kind names round-trip") {
  CHECK(cell_kind_name(CellKind::kEgru) == std::string("egru"));
  CHECK(cell_kind_name(CellKind::kGru) == std::string("gru"));
  CHECK(cell_kind_name(CellKind::kRnn) == std::string("rnn"));
}
