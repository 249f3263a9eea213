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
#include <span>
#include <vector>

#include "egru/features.hpp"
#include "egru/network.hpp"

namespace egru {

// ---------------------------------------------------------------------------
// Optimizer.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected update, then an unconditional clamp of every parameter
// to [-1, 1]. The clamp keeps the master weights inside the representable
// septenary range so quantization never has to extrapolate.
void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state, const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Per-example gradient.
// ---------------------------------------------------------------------------

struct ExampleResult {
  double loss = 0.0;
  int pred = 0;
};

// Full forward (sequence, dense head, softmax cross-entropy) and backward
// through time for one example. Gradients accumulate (+=) into grads.
// fwd_params are the weights the forward pass uses; under straight-through
// quantized training the caller passes the septenary projection here while
// the resulting gradients update the full-precision master copy.
ExampleResult example_grad(const ModelConfig& cfg,
                           std::span<const double> fwd_params,
                           const Spectrogram& spec, int label, bool clip,
                           std::span<double> grads);

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<int> confusion;  // row true class, column predicted
};

// idx selects the examples to score; pass the identity to score everything.
EvalStats evaluate(const ModelConfig& cfg, std::span<const double> params,
                   const LabeledDataset& ds, std::span<const std::size_t> idx,
                   const ForwardOptions& opt);

// Integer path. Cross-entropy is not defined for raw Acc32 logits, so loss
// comes back NaN; accuracy and the confusion matrix are exact.
EvalStats evaluate_q15(const ModelConfig& cfg, std::span<const wcode_t> codes,
                       const LabeledDataset& ds,
                       std::span<const std::size_t> idx);

std::vector<std::size_t> all_indices(const LabeledDataset& ds);

// ---------------------------------------------------------------------------
// Splits.
// ---------------------------------------------------------------------------

struct SplitPlan {
  std::vector<std::size_t> train, val;
};

// Stratified k-fold: each class is shuffled by seed, then positions congruent
// to fold modulo k validate. The same seed reproduces the same folds.
SplitPlan kfold_split(const LabeledDataset& ds, int k, int fold,
                      std::uint64_t seed);

// Stratified holdout. Every class keeps at least one example on each side.
SplitPlan holdout_split(const LabeledDataset& ds, double val_fraction,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Training loop.
// ---------------------------------------------------------------------------

struct TrainOptions {
  AdamConfig adam{};
  int epochs = 200;
  int batch_size = 128;
  bool quantize_weights = true;  // straight-through septenary forward
  bool clip_unit_range = true;   // (-1, 1] pre-activation clip
  std::uint64_t seed = 1;
  int log_every = 0;  // stderr progress line every n epochs, 0 = silent
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::vector<double> params;  // full-precision weights at the best epoch
  EpochStats best;
  std::vector<EpochStats> history;
};

// Initializes from opt.seed, runs minibatch BPTT with ADAM, and keeps the
// parameters of the epoch with the lowest validation loss (earliest wins
// ties). Validation is scored with the same quantize/clip semantics the
// training forward uses. Throws TrainError when the loss leaves the finite
// range or the config does not fit the dataset.
TrainResult train_fold(const ModelConfig& cfg, const LabeledDataset& ds,
                       const SplitPlan& split, const TrainOptions& opt);

}  // namespace egru
