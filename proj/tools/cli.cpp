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

#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "egru/bench.hpp"
#include "egru/crc32.hpp"
#include "egru/errors.hpp"
#include "egru/features.hpp"
#include "egru/modelio.hpp"
#include "egru/network.hpp"
#include "egru/training.hpp"
#include "json.hpp"

namespace egru {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct RunCtx {
  std::string command;
  std::vector<std::string> argv;
  std::ostream& out;
  std::ostream& err;
  Clock::time_point start = Clock::now();
  json config = json::object();
  json inputs = json::array();
  json outputs = json::array();

  json file_entry(const fs::path& path, bool hash) const {
    json e;
    e["path"] = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    e["bytes"] = bytes.size();
    if (hash) {
      e["crc32"] = hex32(crc32(bytes));
    } else {
      e["crc32"] = nullptr;  // timing output, varies run to run
    }
    return e;
  }

  void add_input(const fs::path& path) { inputs.push_back(file_entry(path, true)); }
  void add_output(const fs::path& path, bool hash = true) {
    outputs.push_back(file_entry(path, hash));
  }

  void write_manifest(const fs::path& path) {
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       Clock::now() - start)
                       .count();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot write " + path.string());
    f << m.dump(2) << "\n";
    out << "manifest: " << path.string() << "\n";
  }
};

fs::path manifest_path(const std::string& flag, const std::string& primary_out,
                       const std::string& cmd) {
  if (!flag.empty()) return flag;
  if (!primary_out.empty()) return primary_out + ".manifest.json";
  return "egru-" + cmd + ".manifest.json";
}

// ---------------------------------------------------------------------------
// Shared model loading: deployable files and float checkpoints, told apart
// by magic.
// ---------------------------------------------------------------------------

struct AnyModel {
  bool quantized = false;
  LoadedModel model;  // when quantized
  Checkpoint ckpt;    // otherwise

  const ModelConfig& config() const { return quantized ? model.config : ckpt.config; }
};

AnyModel load_any_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelError(ModelError::Kind::kBadLength, "cannot open " + path.string());
  }
  char magic[4] = {};
  in.read(magic, 4);
  AnyModel any;
  if (in.gcount() == 4 && std::memcmp(magic, "EGRU", 4) == 0) {
    any.quantized = true;
    any.model = read_model_file(path);
  } else if (in.gcount() == 4 && std::memcmp(magic, "EGRF", 4) == 0) {
    any.ckpt = read_checkpoint_file(path);
  } else {
    throw ModelError(ModelError::Kind::kBadMagic,
                     path.string() + ": neither a model file nor a checkpoint");
  }
  return any;
}

// Evaluation semantics for a float checkpoint: the eGRU trains quantized and
// clipped, the reference cells train plain.
ForwardOptions checkpoint_options(const ModelConfig& cfg) {
  if (cfg.cell == CellKind::kEgru) return {true, true};
  return {false, false};
}

void check_model_fits(const ModelConfig& cfg, const LabeledDataset& ds) {
  if (cfg.num_classes != ds.num_classes()) {
    throw ModelError(ModelError::Kind::kMismatch,
                     "model expects " + std::to_string(cfg.num_classes) +
                         " classes, dataset has " + std::to_string(ds.num_classes()));
  }
  if (!ds.examples.empty() && cfg.input_bins != ds.examples[0].spec.bins) {
    throw ModelError(ModelError::Kind::kMismatch,
                     "model expects " + std::to_string(cfg.input_bins) +
                         " bins, dataset has " + std::to_string(ds.examples[0].spec.bins));
  }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string manifest;
  int per_class = 134;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a, RunCtx& ctx) {
  const LabeledDataset ds = synth_dataset(a.per_class, a.seed);
  write_dataset_file(a.out, ds);
  ctx.out << "wrote " << ds.examples.size() << " examples, "
          << ds.num_classes() << " classes, " << ds.frames() << " frames to "
          << a.out << "\n";
  ctx.config = {{"per_class", a.per_class}, {"seed", a.seed}};
  ctx.add_output(a.out);
  ctx.write_manifest(manifest_path(a.manifest, a.out, "synth"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string dir, list, out;
  std::string manifest;
  int frames = 24;
};

int cmd_ingest(const IngestArgs& a, RunCtx& ctx) {
  if (a.dir.empty() == a.list.empty()) {
    throw UsageError("ingest needs exactly one of --dir and --list");
  }
  LoadReport report;
  const LabeledDataset ds = a.dir.empty()
                                ? load_manifest(a.list, a.frames, &report)
                                : load_dir(a.dir, a.frames, &report);
  for (const auto& e : report.file_errors) ctx.err << "skipped: " << e << "\n";
  if (!report.file_errors.empty()) {
    ctx.err << report.file_errors.size() << " files skipped\n";
  }
  write_dataset_file(a.out, ds);
  ctx.out << "wrote " << ds.examples.size() << " examples, "
          << ds.num_classes() << " classes, " << a.frames << " frames to "
          << a.out << "\n";
  ctx.config = {{"dir", a.dir}, {"list", a.list}, {"frames", a.frames}};
  if (!a.list.empty()) ctx.add_input(a.list);
  ctx.add_output(a.out);
  ctx.write_manifest(manifest_path(a.manifest, a.out, "ingest"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, history, manifest;
  std::string cell = "egru";
  std::string split = "holdout";
  double lr = 3e-3;
  double val_frac = 0.25;
  int epochs = 200;
  int batch = 128;
  int rec1 = 30, rec2 = 20, dense = 16;
  std::uint64_t seed = 1;
  bool quantize_on = false, quantize_off = false;
  bool clip_on = false, clip_off = false;
  bool quiet = false;
};

CellKind parse_cell(const std::string& name) {
  if (name == "egru") return CellKind::kEgru;
  if (name == "gru") return CellKind::kGru;
  return CellKind::kRnn;
}

int cmd_train(const TrainArgs& a, RunCtx& ctx) {
  if (a.quantize_on && a.quantize_off) {
    throw UsageError("--quantize and --no-quantize conflict");
  }
  if (a.clip_on && a.clip_off) throw UsageError("--clip and --no-clip conflict");

  const LabeledDataset ds = read_dataset_file(a.data);
  ModelConfig cfg;
  cfg.cell = parse_cell(a.cell);
  cfg.input_bins = ds.examples[0].spec.bins;
  cfg.recurrent = {a.rec1, a.rec2};
  cfg.dense = a.dense;
  cfg.num_classes = ds.num_classes();

  TrainOptions opt;
  opt.adam.lr = a.lr;
  opt.epochs = a.epochs;
  opt.batch_size = a.batch;
  // Quantize and clip ship together on the eGRU; the reference cells train
  // plain. Explicit flags pick the ablation arms.
  const bool cell_default = cfg.cell == CellKind::kEgru;
  opt.quantize_weights = a.quantize_on || (cell_default && !a.quantize_off);
  opt.clip_unit_range = a.clip_on || (cell_default && !a.clip_off);
  opt.seed = a.seed;
  opt.log_every = a.quiet ? 0 : std::max(1, a.epochs / 10);

  const std::string history_path =
      a.history.empty() ? a.out + ".history.csv" : a.history;
  std::ofstream history(history_path, std::ios::trunc);
  if (!history) throw DataError("cannot write " + history_path);
  history << "fold,epoch,train_loss,train_acc,val_loss,val_acc\n";

  std::vector<std::string> ckpt_paths;
  std::vector<double> fold_accs;
  std::vector<TrainResult> results;

  auto run_one = [&](int fold, const SplitPlan& split, std::uint64_t seed) {
    TrainOptions fold_opt = opt;
    fold_opt.seed = seed;
    if (!a.quiet) {
      ctx.err << "fold " << fold << ": " << split.train.size() << " train / "
              << split.val.size() << " val\n";
    }
    TrainResult res = train_fold(cfg, ds, split, fold_opt);
    for (const auto& ep : res.history) {
      history << fold << "," << ep.epoch << "," << fmt(ep.train_loss) << ","
              << fmt(ep.train_acc) << "," << fmt(ep.val_loss) << ","
              << fmt(ep.val_acc) << "\n";
    }
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.epoch = res.best.epoch;
    ckpt.val_loss = res.best.val_loss;
    ckpt.val_acc = res.best.val_acc;
    ckpt.params = res.params;
    const std::string path =
        a.split == "kfold10" ? a.out + ".fold" + std::to_string(fold) : a.out;
    write_checkpoint_file(path, ckpt);
    ckpt_paths.push_back(path);
    fold_accs.push_back(res.best.val_acc);
    results.push_back(std::move(res));
  };

  if (a.split == "kfold10") {
    for (int fold = 0; fold < 10; ++fold) {
      // Fold index offsets the seed so folds do not share an initialization.
      run_one(fold, kfold_split(ds, 10, fold, a.seed), a.seed + fold);
    }
  } else {
    run_one(0, holdout_split(ds, a.val_frac, a.seed), a.seed);
  }
  history.close();

  for (std::size_t i = 0; i < results.size(); ++i) {
    ctx.out << "fold " << i << ": best epoch " << results[i].best.epoch
            << ", val loss " << fmt(results[i].best.val_loss) << ", val acc "
            << fmt(results[i].best.val_acc) << "\n";
  }
  double mean = 0.0;
  for (const double acc : fold_accs) mean += acc;
  mean /= static_cast<double>(fold_accs.size());
  if (fold_accs.size() > 1) {
    double var = 0.0;
    for (const double acc : fold_accs) var += (acc - mean) * (acc - mean);
    var /= static_cast<double>(fold_accs.size());
    ctx.out << "val acc mean " << fmt(mean) << " +/- " << fmt(std::sqrt(var))
            << " over " << fold_accs.size() << " folds\n";
  }

  std::string folds_path;
  if (a.split == "kfold10") {
    folds_path = a.out + ".folds.csv";
    std::ofstream folds(folds_path, std::ios::trunc);
    if (!folds) throw DataError("cannot write " + folds_path);
    folds << "fold,best_epoch,val_loss,val_acc\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      folds << i << "," << results[i].best.epoch << ","
            << fmt(results[i].best.val_loss) << ","
            << fmt(results[i].best.val_acc) << "\n";
    }
  }

  ctx.config = {{"cell", a.cell},
                {"split", a.split},
                {"epochs", a.epochs},
                {"batch", a.batch},
                {"lr", a.lr},
                {"val_frac", a.val_frac},
                {"quantize", opt.quantize_weights},
                {"clip", opt.clip_unit_range},
                {"rec1", a.rec1},
                {"rec2", a.rec2},
                {"dense", a.dense},
                {"seed", a.seed}};
  ctx.add_input(a.data);
  for (const auto& p : ckpt_paths) ctx.add_output(p);
  ctx.add_output(history_path);
  if (!folds_path.empty()) ctx.add_output(folds_path);
  ctx.write_manifest(manifest_path(a.manifest, a.out, "train"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string checkpoint, out, manifest;
};

int cmd_export(const ExportArgs& a, RunCtx& ctx) {
  const Checkpoint ckpt = read_checkpoint_file(a.checkpoint);
  if (ckpt.config.cell != CellKind::kEgru) {
    throw ModelError(ModelError::Kind::kUnsupported,
                     std::string("only egru checkpoints export to the integer "
                                 "format, got ") +
                         cell_kind_name(ckpt.config.cell));
  }
  const std::vector<wcode_t> codes = quantize_params(ckpt.params);
  write_model_file(a.out, ckpt.config, codes);
  ctx.out << "cell " << cell_kind_name(ckpt.config.cell) << ", parameters "
          << param_count(ckpt.config) << ", file "
          << model_file_size(ckpt.config) << " bytes\n";
  ctx.config = {{"checkpoint", a.checkpoint}};
  ctx.add_input(a.checkpoint);
  ctx.add_output(a.out);
  ctx.write_manifest(manifest_path(a.manifest, a.out, "export"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

struct InferArgs {
  std::string model, wav, out, manifest;
  int frames = 0;  // 0: derived from clip length
};

int cmd_infer(const InferArgs& a, RunCtx& ctx) {
  const AnyModel any = load_any_model(a.model);
  const AudioClip clip = resample_8k(decode_wav_file(a.wav));
  const int frames =
      a.frames > 0
          ? a.frames
          : std::max<int>(1, static_cast<int>((clip.samples.size() +
                                               kFrameSamples - 1) /
                                              kFrameSamples));
  const Spectrogram spec = stft_features(clip, frames);
  if (spec.bins != any.config().input_bins) {
    throw ModelError(ModelError::Kind::kMismatch,
                     "model expects " + std::to_string(any.config().input_bins) +
                         " bins, features have " + std::to_string(spec.bins));
  }

  json result;
  int pred = 0;
  if (any.quantized) {
    std::vector<acc32_t> logits;
    const auto t0 = Clock::now();
    pred = forward_q15(any.config(), any.model.codes, spec, &logits);
    const auto t1 = Clock::now();
    result["pred"] = pred;
    ctx.out << "pred " << pred << "\n";
    for (std::size_t c = 0; c < logits.size(); ++c) {
      const double v = acc_to_real(logits[c]);
      result["logits"].push_back(v);
      ctx.out << "logit[" << c << "] " << fmt(v) << "\n";
    }
    ctx.out << "inference "
            << std::chrono::duration<double, std::micro>(t1 - t0).count()
            << " us (" << frames << " frames)\n";
  } else {
    const FloatOutput fo = forward_float(any.config(), any.ckpt.params, spec,
                                         checkpoint_options(any.config()));
    pred = argmax_index(fo.probs);
    result["pred"] = pred;
    ctx.out << "pred " << pred << "\n";
    for (std::size_t c = 0; c < fo.logits.size(); ++c) {
      result["logits"].push_back(fo.logits[c]);
      result["probs"].push_back(fo.probs[c]);
      ctx.out << "logit[" << c << "] " << fmt(fo.logits[c]) << "  prob "
              << fmt(fo.probs[c]) << "\n";
    }
  }

  ctx.config = {{"model", a.model}, {"wav", a.wav}, {"frames", frames}};
  ctx.add_input(a.model);
  ctx.add_input(a.wav);
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw DataError("cannot write " + a.out);
    f << result.dump(2) << "\n";
    ctx.add_output(a.out);
  }
  ctx.write_manifest(manifest_path(a.manifest, a.out, "infer"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model, baseline, data, out, manifest;
};

struct ScoredModel {
  EvalStats stats;
  double mean_us = 0.0;
  bool quantized = false;
};

ScoredModel score(const AnyModel& any, const LabeledDataset& ds) {
  ScoredModel s;
  s.quantized = any.quantized;
  const auto idx = all_indices(ds);
  const auto t0 = Clock::now();
  if (any.quantized) {
    s.stats = evaluate_q15(any.config(), any.model.codes, ds, idx);
  } else {
    s.stats = evaluate(any.config(), any.ckpt.params, ds, idx,
                       checkpoint_options(any.config()));
  }
  const auto t1 = Clock::now();
  s.mean_us = std::chrono::duration<double, std::micro>(t1 - t0).count() /
              static_cast<double>(ds.examples.size());
  return s;
}

int cmd_eval(const EvalArgs& a, RunCtx& ctx) {
  const LabeledDataset ds = read_dataset_file(a.data);
  const AnyModel primary = load_any_model(a.model);
  check_model_fits(primary.config(), ds);

  const ScoredModel ps = score(primary, ds);
  const long total = static_cast<long>(ds.examples.size());
  const long correct = std::lround(ps.stats.accuracy * total);
  ctx.out << "accuracy " << fmt(ps.stats.accuracy) << " (" << correct << "/"
          << total << ")"
          << (ps.quantized ? " [q15]" : " [float]") << "\n";
  ctx.out << "mean wall time " << fmt(ps.mean_us) << " us/clip\n";

  if (!a.baseline.empty()) {
    const AnyModel base = load_any_model(a.baseline);
    check_model_fits(base.config(), ds);
    const ScoredModel bs = score(base, ds);
    ctx.out << "baseline accuracy " << fmt(bs.stats.accuracy)
            << (bs.quantized ? " [q15]" : " [float]") << "\n";
    ctx.out << "gap " << fmt((ps.stats.accuracy - bs.stats.accuracy) * 100.0)
            << " points\n";
  }

  const std::string out_path =
      a.out.empty() ? a.data + ".confusion.csv" : a.out;
  {
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw DataError("cannot write " + out_path);
    f << "class";
    for (const auto& name : ds.class_names) f << "," << name;
    f << "\n";
    const int nc = ds.num_classes();
    for (int t = 0; t < nc; ++t) {
      f << ds.class_names[t];
      for (int p = 0; p < nc; ++p) {
        f << "," << ps.stats.confusion[static_cast<std::size_t>(t) * nc + p];
      }
      f << "\n";
    }
  }
  ctx.out << "confusion: " << out_path << "\n";

  ctx.config = {{"model", a.model}, {"baseline", a.baseline}, {"data", a.data}};
  ctx.add_input(a.model);
  if (!a.baseline.empty()) ctx.add_input(a.baseline);
  ctx.add_input(a.data);
  ctx.add_output(out_path);
  ctx.write_manifest(manifest_path(a.manifest, out_path, "eval"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string suite = "all";
  std::string out = "bench.csv";
  std::string manifest;
  int samples = 101;
};

int cmd_bench(const BenchArgs& a, RunCtx& ctx) {
  if (a.samples < 3) throw UsageError("--samples must be at least 3");
  std::ofstream csv(a.out, std::ios::trunc);
  if (!csv) throw DataError("cannot write " + a.out);
  csv << "suite,metric,value\n";
  bool timing = false;

  const ModelConfig cfg;  // audit shape: the cough-task eGRU

  if (a.suite == "activations" || a.suite == "all") {
    timing = true;
    const ActivationBench ab = bench_activations(a.samples);
    auto row = [&](const char* name, const BenchStats& s) {
      ctx.out << "activations: " << name << " median "
              << fmt(s.median_ns / ab.batch) << " ns/call, p95 "
              << fmt(s.p95_ns / ab.batch) << " ns/call\n";
      csv << "activations," << name << "_median_ns," << fmt(s.median_ns / ab.batch)
          << "\n";
      csv << "activations," << name << "_p95_ns," << fmt(s.p95_ns / ab.batch)
          << "\n";
    };
    row("q15_softsign", ab.q15_softsign);
    row("q15_gate", ab.q15_gate);
    row("float_softsign", ab.float_softsign);
    row("float_sigmoid", ab.float_sigmoid);
    row("float_tanh", ab.float_tanh);
    ctx.out << "activations: q15 softsign / float tanh median ratio "
            << fmt(ab.q15_softsign.median_ns / ab.float_tanh.median_ns) << "\n";
  }

  if (a.suite == "cells" || a.suite == "all") {
    timing = true;
    const CellBench cb = bench_cells(a.samples, cfg);
    auto row = [&](const char* name, const BenchStats& s) {
      ctx.out << "cells: " << name << " median " << fmt(s.median_ns)
              << " ns/step, p95 " << fmt(s.p95_ns) << " ns/step\n";
      csv << "cells," << name << "_median_ns," << fmt(s.median_ns) << "\n";
      csv << "cells," << name << "_p95_ns," << fmt(s.p95_ns) << "\n";
    };
    row("egru_q15", cb.egru_q15);
    row("gru_float", cb.gru_float);
    row("rnn_float", cb.rnn_float);
    ctx.out << "cells: shape " << cb.hidden << "x(" << cb.hidden << "+"
            << cb.input << "), q15 egru / float gru median ratio "
            << fmt(cb.egru_q15.median_ns / cb.gru_float.median_ns) << "\n";
  }

  if (a.suite == "ops" || a.suite == "all") {
    for (const CellKind kind :
         {CellKind::kEgru, CellKind::kGru, CellKind::kRnn}) {
      const OpAudit audit = audit_ops(kind);
      const char* name = cell_kind_name(kind);
      ctx.out << "ops: " << name << " canonical add " << audit.canonical.adds
              << " mul " << audit.canonical.muls << " shift "
              << audit.canonical.shifts << " params " << audit.canonical.params
              << " (" << audit.weight_bytes_per_unit << " bytes/unit)\n";
      ctx.out << "ops: " << name << " measured  add " << audit.measured.adds
              << " mul " << audit.measured.muls << " shift "
              << audit.measured.shifts
              << (audit.value_match ? "" : "  VALUE MISMATCH") << "\n";
      auto row = [&](const std::string& metric, long v) {
        csv << "ops," << name << "_" << metric << "," << v << "\n";
      };
      row("canonical_adds", audit.canonical.adds);
      row("canonical_muls", audit.canonical.muls);
      row("canonical_shifts", audit.canonical.shifts);
      row("params_per_unit", audit.canonical.params);
      row("measured_adds", audit.measured.adds);
      row("measured_muls", audit.measured.muls);
      row("measured_shifts", audit.measured.shifts);
      row("weight_bytes_per_unit", audit.weight_bytes_per_unit);
      row("value_match", audit.value_match ? 1 : 0);
    }
    const MemoryAudit mem = audit_memory(cfg);
    ctx.out << "ops: model weights " << mem.weight_bytes << " B packed, state "
            << mem.state_bytes << " B, file " << mem.file_bytes
            << " B (float32 weights would be " << mem.float_weight_bytes
            << " B)\n";
    csv << "ops,model_weight_bytes," << mem.weight_bytes << "\n";
    csv << "ops,model_state_bytes," << mem.state_bytes << "\n";
    csv << "ops,model_file_bytes," << mem.file_bytes << "\n";
    csv << "ops,model_float_weight_bytes," << mem.float_weight_bytes << "\n";
  }
  csv.close();

  ctx.config = {{"suite", a.suite}, {"samples", a.samples}};
  // Latency numbers vary run to run, so timing CSVs are listed unhashed.
  ctx.add_output(a.out, !timing);
  ctx.write_manifest(manifest_path(a.manifest, a.out, "bench"));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"septenary-quantized recurrent audio classifier"};
  app.name("egru");
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate the synthetic 3-class dataset");
  synth->add_option("--out", synth_args.out, "dataset file to write")->required();
  synth->add_option("--per-class", synth_args.per_class, "examples per class")
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--manifest", synth_args.manifest, "manifest path");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "featurize a directory or list of WAV files");
  ingest->add_option("--dir", ingest_args.dir, "root with one subdirectory per class");
  ingest->add_option("--list", ingest_args.list, "CSV of path,label rows");
  ingest->add_option("--frames", ingest_args.frames, "spectrogram frames per clip")
      ->check(CLI::PositiveNumber);
  ingest->add_option("--out", ingest_args.out, "dataset file to write")->required();
  ingest->add_option("--manifest", ingest_args.manifest, "manifest path");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a cell on a dataset file");
  train->add_option("--data", train_args.data, "dataset file")->required();
  train->add_option("--cell", train_args.cell, "recurrent cell")
      ->check(CLI::IsMember({"egru", "gru", "rnn"}));
  train->add_flag("--quantize", train_args.quantize_on,
                  "septenary forward weights (default for egru)");
  train->add_flag("--no-quantize", train_args.quantize_off, "disable quantization");
  train->add_flag("--clip", train_args.clip_on,
                  "(-1,1] pre-activation clip (default for egru)");
  train->add_flag("--no-clip", train_args.clip_off, "disable the clip");
  train->add_option("--split", train_args.split, "validation scheme")
      ->check(CLI::IsMember({"holdout", "kfold10"}));
  train->add_option("--val-frac", train_args.val_frac, "holdout validation fraction");
  train->add_option("--epochs", train_args.epochs)->check(CLI::PositiveNumber);
  train->add_option("--batch", train_args.batch)->check(CLI::PositiveNumber);
  train->add_option("--lr", train_args.lr, "ADAM step size");
  train->add_option("--rec1", train_args.rec1, "first recurrent width")
      ->check(CLI::PositiveNumber);
  train->add_option("--rec2", train_args.rec2, "second recurrent width")
      ->check(CLI::PositiveNumber);
  train->add_option("--dense", train_args.dense, "dense width")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", train_args.seed, "init and shuffle seed");
  train->add_option("--out", train_args.out, "checkpoint path (kfold10 appends .foldN)")
      ->required();
  train->add_option("--history", train_args.history, "per-epoch CSV path");
  train->add_flag("--quiet", train_args.quiet, "suppress progress lines");
  train->add_option("--manifest", train_args.manifest, "manifest path");

  ExportArgs export_args;
  auto* exp = app.add_subcommand("export", "quantize a checkpoint into a model file");
  exp->add_option("--checkpoint", export_args.checkpoint, "float checkpoint")
      ->required();
  exp->add_option("--out", export_args.out, "model file to write")->required();
  exp->add_option("--manifest", export_args.manifest, "manifest path");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "classify one WAV clip");
  infer->add_option("--model", infer_args.model, "model file or checkpoint")
      ->required();
  infer->add_option("--wav", infer_args.wav, "input clip")->required();
  infer->add_option("--frames", infer_args.frames,
                    "spectrogram frames (default: clip length / 128)");
  infer->add_option("--out", infer_args.out, "prediction JSON path");
  infer->add_option("--manifest", infer_args.manifest, "manifest path");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score a model on a dataset file");
  eval->add_option("--model", eval_args.model, "model file or checkpoint")
      ->required();
  eval->add_option("--baseline", eval_args.baseline,
                   "second model; the accuracy gap is reported");
  eval->add_option("--data", eval_args.data, "dataset file")->required();
  eval->add_option("--out", eval_args.out, "confusion CSV path");
  eval->add_option("--manifest", eval_args.manifest, "manifest path");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "latency and op/memory accounting");
  bench->add_option("--suite", bench_args.suite, "which tables to run")
      ->check(CLI::IsMember({"activations", "cells", "ops", "all"}));
  bench->add_option("--samples", bench_args.samples, "timing samples per entry");
  bench->add_option("--out", bench_args.out, "CSV path");
  bench->add_option("--manifest", bench_args.manifest, "manifest path");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("egru");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  RunCtx ctx{app.get_subcommands().front()->get_name(), args, out, err};
  try {
    if (synth->parsed()) return cmd_synth(synth_args, ctx);
    if (ingest->parsed()) return cmd_ingest(ingest_args, ctx);
    if (train->parsed()) return cmd_train(train_args, ctx);
    if (exp->parsed()) return cmd_export(export_args, ctx);
    if (infer->parsed()) return cmd_infer(infer_args, ctx);
    if (eval->parsed()) return cmd_eval(eval_args, ctx);
    if (bench->parsed()) return cmd_bench(bench_args, ctx);
    err << "error: no subcommand\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitModel;
  } catch (const TrainError& e) {
    err << "training error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace egru
