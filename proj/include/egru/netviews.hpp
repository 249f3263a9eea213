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

#include <span>

#include "egru/cells.hpp"
#include "egru/network.hpp"

namespace egru {

// Typed views over the flat parameter vector, in layout order. The same
// offsets serve the forward pass, the gradient buffers and serialization.

struct DenseViews {
  std::span<const double> w, b;    // dense (ReLU) layer
  std::span<const double> cw, cb;  // classifier
};
struct DenseGrads {
  std::span<double> w, b, cw, cb;
};

struct EgruNetViews {
  EgruLayerView l1, l2;
  DenseViews head;
};
struct GruNetViews {
  GruLayerView l1, l2;
  DenseViews head;
};
struct RnnNetViews {
  RnnLayerView l1, l2;
  DenseViews head;
};

struct EgruNetGrads {
  EgruLayerGrads l1, l2;
  DenseGrads head;
};
struct GruNetGrads {
  GruLayerGrads l1, l2;
  DenseGrads head;
};
struct RnnNetGrads {
  RnnLayerGrads l1, l2;
  DenseGrads head;
};

EgruNetViews egru_views(const ModelConfig& cfg, std::span<const double> params);
GruNetViews gru_views(const ModelConfig& cfg, std::span<const double> params);
RnnNetViews rnn_views(const ModelConfig& cfg, std::span<const double> params);

EgruNetGrads egru_grads(const ModelConfig& cfg, std::span<double> grads);
GruNetGrads gru_grads(const ModelConfig& cfg, std::span<double> grads);
RnnNetGrads rnn_grads(const ModelConfig& cfg, std::span<double> grads);

}  // namespace egru
