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
#include <chrono>
#include <cstddef>
#include <vector>

#include "egru/network.hpp"

namespace egru {

template <typename T>
inline void do_not_optimize(T const& value) {
  asm volatile("" : : "r,m"(value) : "memory");
}

struct BenchStats {
  double median_ns = 0.0;
  double p95_ns = 0.0;
  int samples = 0;
};

// Times fn once per sample and reports order statistics over the samples.
// fn must carry enough work to dominate the clock overhead; the per-call
// protocols below batch accordingly.
template <typename F>
BenchStats bench_loop(int samples, F&& fn) {
  std::vector<double> ns(static_cast<std::size_t>(std::max(samples, 1)));
  fn();  // warm caches before the first timed sample
  for (auto& sample : ns) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    sample = std::chrono::duration<double, std::nano>(t1 - t0).count();
  }
  std::sort(ns.begin(), ns.end());
  BenchStats stats;
  stats.samples = static_cast<int>(ns.size());
  stats.median_ns = ns[ns.size() / 2];
  stats.p95_ns = ns[std::min(ns.size() - 1, ns.size() * 95 / 100)];
  return stats;
}

// Activation timing. One sample covers a fixed sweep of 1000 inputs, so
// per-activation cost is median_ns / 1000.
struct ActivationBench {
  BenchStats q15_softsign;
  BenchStats q15_gate;
  BenchStats float_softsign;
  BenchStats float_sigmoid;
  BenchStats float_tanh;
  int batch = 1000;
};
ActivationBench bench_activations(int samples);

// Cell step timing at the first-layer shape of the given config. One sample
// is a single full layer step.
struct CellBench {
  BenchStats egru_q15;
  BenchStats gru_float;
  BenchStats rnn_float;
  int hidden = 0;
  int input = 0;
};
CellBench bench_cells(int samples, const ModelConfig& cfg);

// Per hidden unit operation counts for the scalar case (one recurrent term,
// one input term). canonical is the textbook update; measured counts what the
// implemented kernel executes. For the float reference cells the two agree by
// construction.
struct OpCounts {
  long params = 0;
  long adds = 0;
  long muls = 0;
  long shifts = 0;
  long activations = 0;
};

struct OpAudit {
  OpCounts canonical;
  OpCounts measured;
  long weight_bits_per_unit = 0;   // at deployed precision
  long weight_bytes_per_unit = 0;  // rounded up to whole bytes
  bool value_match = false;  // counting replica reproduced the production step
};
OpAudit audit_ops(CellKind kind);

// Whole-model memory accounting.
struct MemoryAudit {
  std::size_t weight_bytes = 0;        // packed septenary payload
  std::size_t state_bytes = 0;         // persistent hidden state, Q15
  std::size_t file_bytes = 0;          // serialized model file
  std::size_t float_weight_bytes = 0;  // same parameters as 32-bit floats
};
MemoryAudit audit_memory(const ModelConfig& cfg);

}  // namespace egru
