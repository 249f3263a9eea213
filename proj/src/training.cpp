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

#include "egru/training.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "egru/errors.hpp"
#include "egru/netviews.hpp"
#include "egru/threading.hpp"

namespace egru {

void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_update: size mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    params[i] = std::clamp(params[i], -1.0, 1.0);
  }
}

namespace {

std::vector<double> frame_to_real(const Spectrogram& spec, int t) {
  const auto f = spec.frame(t);
  std::vector<double> x(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) x[i] = q15_to_real(f[i]);
  return x;
}

// Shared sequence-plus-head pass for all three cell kinds. StepF and BackF
// are the per-cell step functions; NetViews/NetGrads expose l1, l2, head.
template <typename Cache, typename NetViews, typename NetGrads, typename StepF,
          typename BackF>
ExampleResult run_example(const ModelConfig& cfg, const NetViews& net,
                          const NetGrads& g, const Spectrogram& spec, int label,
                          bool clip, StepF step, BackF back) {
  const int T = spec.frames;
  const int h1n = cfg.recurrent[0];
  const int h2n = cfg.recurrent[1];
  const int dn = cfg.dense;
  const int nc = cfg.num_classes;

  // Forward, keeping every state and cache for the walk back.
  std::vector<std::vector<double>> xs(T);
  std::vector<std::vector<double>> h1(T + 1), h2(T + 1);
  std::vector<Cache> c1(T), c2(T);
  h1[0].assign(h1n, 0.0);
  h2[0].assign(h2n, 0.0);
  for (int t = 0; t < T; ++t) {
    xs[t] = frame_to_real(spec, t);
    h1[t + 1].assign(h1n, 0.0);
    h2[t + 1].assign(h2n, 0.0);
    step(net.l1, xs[t], h1[t], h1[t + 1], clip, &c1[t]);
    step(net.l2, h1[t + 1], h2[t], h2[t + 1], clip, &c2[t]);
  }

  const auto& hv = h2[T];
  std::vector<double> a(dn), hd(dn);
  for (int i = 0; i < dn; ++i) {
    double acc = net.head.b[i];
    for (int j = 0; j < h2n; ++j) acc += net.head.w[i * h2n + j] * hv[j];
    a[i] = acc;
    const double ac = clip ? clip_unit(acc) : acc;
    hd[i] = ac > 0.0 ? ac : 0.0;
  }
  std::vector<double> logits(nc);
  for (int c = 0; c < nc; ++c) {
    double acc = net.head.cb[c];
    for (int i = 0; i < dn; ++i) acc += net.head.cw[c * dn + i] * hd[i];
    logits[c] = acc;
  }
  const std::vector<double> probs = softmax(logits);

  ExampleResult res;
  res.pred = argmax_index(probs);
  res.loss = -std::log(std::max(probs[label], 1e-300));

  // Head backward.
  std::vector<double> dhd(dn, 0.0);
  for (int c = 0; c < nc; ++c) {
    const double dl = probs[c] - (c == label ? 1.0 : 0.0);
    g.head.cb[c] += dl;
    for (int i = 0; i < dn; ++i) {
      g.head.cw[c * dn + i] += dl * hd[i];
      dhd[i] += dl * net.head.cw[c * dn + i];
    }
  }
  std::vector<double> dh2(h2n, 0.0);
  for (int i = 0; i < dn; ++i) {
    const bool relu_open = (clip ? clip_unit(a[i]) : a[i]) > 0.0;
    const bool clip_open = !clip || clip_unit_inside(a[i]);
    const double da = relu_open && clip_open ? dhd[i] : 0.0;
    if (da == 0.0) continue;
    g.head.b[i] += da;
    for (int j = 0; j < h2n; ++j) {
      g.head.w[i * h2n + j] += da * hv[j];
      dh2[j] += da * net.head.w[i * h2n + j];
    }
  }

  // Through time. dx of layer 2 feeds dh of layer 1 at the same step.
  std::vector<double> dh1(h1n, 0.0);
  std::vector<double> dh1_prev(h1n), dh2_prev(h2n), dx2(h1n), dx1(cfg.input_bins);
  for (int t = T - 1; t >= 0; --t) {
    dh2_prev.assign(h2n, 0.0);
    dx2.assign(h1n, 0.0);
    back(net.l2, h1[t + 1], h2[t], c2[t], dh2, dh2_prev, dx2, g.l2, clip);
    for (int j = 0; j < h1n; ++j) dh1[j] += dx2[j];

    dh1_prev.assign(h1n, 0.0);
    dx1.assign(cfg.input_bins, 0.0);
    back(net.l1, xs[t], h1[t], c1[t], dh1, dh1_prev, dx1, g.l1, clip);

    dh2.swap(dh2_prev);
    dh1.swap(dh1_prev);
  }
  return res;
}

}  // namespace

ExampleResult example_grad(const ModelConfig& cfg,
                           std::span<const double> fwd_params,
                           const Spectrogram& spec, int label, bool clip,
                           std::span<double> grads) {
  if (grads.size() != param_count(cfg) || fwd_params.size() != param_count(cfg)) {
    throw std::invalid_argument("example_grad: parameter size mismatch");
  }
  if (spec.bins != cfg.input_bins || spec.frames < 1) {
    throw std::invalid_argument("example_grad: spectrogram shape mismatch");
  }
  if (label < 0 || label >= cfg.num_classes) {
    throw std::invalid_argument("example_grad: label out of range");
  }
  switch (cfg.cell) {
    case CellKind::kEgru:
      return run_example<EgruStepCache>(cfg, egru_views(cfg, fwd_params),
                                        egru_grads(cfg, grads), spec, label,
                                        clip, egru_step_forward,
                                        egru_step_backward);
    case CellKind::kGru:
      return run_example<GruStepCache>(cfg, gru_views(cfg, fwd_params),
                                       gru_grads(cfg, grads), spec, label, clip,
                                       gru_step_forward, gru_step_backward);
    case CellKind::kRnn:
      return run_example<RnnStepCache>(cfg, rnn_views(cfg, fwd_params),
                                       rnn_grads(cfg, grads), spec, label, clip,
                                       rnn_step_forward, rnn_step_backward);
  }
  throw std::invalid_argument("example_grad: unknown cell kind");
}

std::vector<std::size_t> all_indices(const LabeledDataset& ds) {
  std::vector<std::size_t> idx(ds.examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

EvalStats evaluate(const ModelConfig& cfg, std::span<const double> params,
                   const LabeledDataset& ds, std::span<const std::size_t> idx,
                   const ForwardOptions& opt) {
  EvalStats stats;
  stats.confusion.assign(static_cast<std::size_t>(cfg.num_classes) * cfg.num_classes, 0);
  if (idx.empty()) return stats;
  std::vector<double> losses(idx.size());
  std::vector<int> preds(idx.size());
  parallel_for(idx.size(), [&](std::size_t i) {
    const auto& ex = ds.examples.at(idx[i]);
    const FloatOutput out = forward_float(cfg, params, ex.spec, opt);
    preds[i] = argmax_index(out.probs);
    losses[i] = -std::log(std::max(out.probs[ex.label], 1e-300));
  });
  int correct = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int truth = ds.examples[idx[i]].label;
    stats.loss += losses[i];
    stats.confusion[static_cast<std::size_t>(truth) * cfg.num_classes + preds[i]] += 1;
    if (preds[i] == truth) ++correct;
  }
  stats.loss /= static_cast<double>(idx.size());
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
  return stats;
}

EvalStats evaluate_q15(const ModelConfig& cfg, std::span<const wcode_t> codes,
                       const LabeledDataset& ds,
                       std::span<const std::size_t> idx) {
  EvalStats stats;
  stats.loss = std::nan("");
  stats.confusion.assign(static_cast<std::size_t>(cfg.num_classes) * cfg.num_classes, 0);
  if (idx.empty()) return stats;
  std::vector<int> preds(idx.size());
  parallel_for(idx.size(), [&](std::size_t i) {
    preds[i] = forward_q15(cfg, codes, ds.examples.at(idx[i]).spec);
  });
  int correct = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int truth = ds.examples[idx[i]].label;
    stats.confusion[static_cast<std::size_t>(truth) * cfg.num_classes + preds[i]] += 1;
    if (preds[i] == truth) ++correct;
  }
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
  return stats;
}

namespace {

std::vector<std::vector<std::size_t>> by_class(const LabeledDataset& ds) {
  std::vector<std::vector<std::size_t>> classes(ds.num_classes());
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const int label = ds.examples[i].label;
    if (label < 0 || label >= ds.num_classes()) {
      throw DataError("label out of range in dataset");
    }
    classes[label].push_back(i);
  }
  return classes;
}

}  // namespace

SplitPlan kfold_split(const LabeledDataset& ds, int k, int fold,
                      std::uint64_t seed) {
  if (k < 2) throw DataError("kfold needs k >= 2");
  if (fold < 0 || fold >= k) throw DataError("fold out of range");
  auto classes = by_class(ds);
  Rng rng(seed);
  SplitPlan plan;
  for (auto& members : classes) {
    if (static_cast<int>(members.size()) < k) {
      throw DataError("class with fewer examples than folds");
    }
    rng.shuffle(members);
    for (std::size_t pos = 0; pos < members.size(); ++pos) {
      (static_cast<int>(pos % k) == fold ? plan.val : plan.train)
          .push_back(members[pos]);
    }
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.val.begin(), plan.val.end());
  return plan;
}

SplitPlan holdout_split(const LabeledDataset& ds, double val_fraction,
                        std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw DataError("val_fraction must lie in (0, 1)");
  }
  auto classes = by_class(ds);
  Rng rng(seed);
  SplitPlan plan;
  for (auto& members : classes) {
    if (members.size() < 2) {
      throw DataError("class needs at least two examples to split");
    }
    rng.shuffle(members);
    const auto n = static_cast<long>(members.size());
    const long take = std::clamp<long>(std::lround(val_fraction * n), 1, n - 1);
    for (long pos = 0; pos < n; ++pos) {
      (pos < take ? plan.val : plan.train).push_back(members[pos]);
    }
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.val.begin(), plan.val.end());
  return plan;
}

TrainResult train_fold(const ModelConfig& cfg, const LabeledDataset& ds,
                       const SplitPlan& split, const TrainOptions& opt) {
  if (ds.examples.empty()) throw TrainError("empty dataset");
  if (cfg.num_classes != ds.num_classes()) {
    throw TrainError("model expects " + std::to_string(cfg.num_classes) +
                     " classes, dataset has " + std::to_string(ds.num_classes()));
  }
  if (cfg.input_bins != ds.examples[0].spec.bins) {
    throw TrainError("model expects " + std::to_string(cfg.input_bins) +
                     " bins, dataset has " + std::to_string(ds.examples[0].spec.bins));
  }
  if (split.train.empty()) throw TrainError("empty training split");
  if (opt.epochs < 1) throw TrainError("epochs must be positive");
  if (opt.batch_size < 1) throw TrainError("batch size must be positive");
  for (const auto i : split.train) {
    if (i >= ds.examples.size()) throw TrainError("train index out of range");
  }
  for (const auto i : split.val) {
    if (i >= ds.examples.size()) throw TrainError("val index out of range");
  }

  const std::size_t n = param_count(cfg);
  Rng rng(opt.seed);
  std::vector<double> params = init_params(cfg, rng);
  AdamState adam(n);

  const ForwardOptions eval_opt{opt.quantize_weights, opt.clip_unit_range};
  std::vector<std::size_t> order(split.train);

  // Per-example gradient buffers; the reduction below walks them in example
  // order, so results do not depend on the worker count.
  const std::size_t max_batch =
      std::min<std::size_t>(order.size(), static_cast<std::size_t>(opt.batch_size));
  std::vector<std::vector<double>> ex_grads(max_batch);
  std::vector<ExampleResult> ex_res(max_batch);
  std::vector<double> batch_grad(n);

  TrainResult result;
  bool have_best = false;

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    rng.shuffle(order);

    // Weights seen by this epoch's forward passes. The septenary projection
    // is refreshed after every optimizer step.
    std::vector<double> fwd_params;
    auto refresh = [&] {
      if (opt.quantize_weights) {
        fwd_params = dequantize_params(quantize_params(params));
      } else {
        fwd_params.assign(params.begin(), params.end());
      }
    };
    refresh();

    double loss_sum = 0.0;
    long correct = 0;
    for (std::size_t start = 0; start < order.size(); start += max_batch) {
      const std::size_t count = std::min(max_batch, order.size() - start);
      parallel_for(count, [&](std::size_t i) {
        ex_grads[i].assign(n, 0.0);
        const auto& ex = ds.examples[order[start + i]];
        ex_res[i] = example_grad(cfg, fwd_params, ex.spec, ex.label,
                                 opt.clip_unit_range, ex_grads[i]);
      });
      batch_grad.assign(n, 0.0);
      for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < n; ++j) batch_grad[j] += ex_grads[i][j];
        loss_sum += ex_res[i].loss;
        if (ex_res[i].pred == ds.examples[order[start + i]].label) ++correct;
      }
      const double scale = 1.0 / static_cast<double>(count);
      for (std::size_t j = 0; j < n; ++j) batch_grad[j] *= scale;
      adam_update(params, batch_grad, adam, opt.adam);
      refresh();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!std::isfinite(stats.train_loss)) {
      throw TrainError("non-finite training loss at epoch " + std::to_string(epoch));
    }
    if (split.val.empty()) {
      stats.val_loss = stats.train_loss;
      stats.val_acc = stats.train_acc;
    } else {
      const EvalStats val = evaluate(cfg, params, ds, split.val, eval_opt);
      stats.val_loss = val.loss;
      stats.val_acc = val.accuracy;
    }
    if (!std::isfinite(stats.val_loss)) {
      throw TrainError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(stats);

    if (!have_best || stats.val_loss < result.best.val_loss) {
      have_best = true;
      result.best = stats;
      result.params = params;
    }
    if (opt.log_every > 0 && epoch % opt.log_every == 0) {
      std::fprintf(stderr,
                   "epoch %3d  train loss %.4f acc %.3f  val loss %.4f acc %.3f\n",
                   epoch, stats.train_loss, stats.train_acc, stats.val_loss,
                   stats.val_acc);
    }
  }
  return result;
}

}  // namespace egru
