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
#include <filesystem>
#include <span>
#include <vector>

#include "egru/network.hpp"
#include "egru/quantizer.hpp"

namespace egru {

// Deployable model: 16-byte header, per-tensor 3-bit packed weight codes
// (each tensor starts on a byte boundary), trailing CRC-32 over everything
// before it. See docs/FORMATS.md for the byte-level layout.
std::size_t model_file_size(const ModelConfig& cfg);

std::vector<std::uint8_t> write_model(const ModelConfig& cfg,
                                      std::span<const wcode_t> codes);
void write_model_file(const std::filesystem::path& path, const ModelConfig& cfg,
                      std::span<const wcode_t> codes);

struct LoadedModel {
  ModelConfig config;
  std::vector<wcode_t> codes;
};

LoadedModel read_model(std::span<const std::uint8_t> bytes);
LoadedModel read_model_file(const std::filesystem::path& path);

// Float checkpoint, used between training and export. Same header shape as
// the deployable file but with raw f64 parameters, so precision is kept for
// resumed or inspected runs.
struct Checkpoint {
  ModelConfig config;
  int epoch = 0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  std::vector<double> params;
};

std::vector<std::uint8_t> write_checkpoint(const Checkpoint& ckpt);
void write_checkpoint_file(const std::filesystem::path& path,
                           const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::span<const std::uint8_t> bytes);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

}  // namespace egru
