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

#include "egru/modelio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "egru/crc32.hpp"
#include "egru/errors.hpp"

namespace egru {

namespace {

constexpr char kModelMagic[4] = {'E', 'G', 'R', 'U'};
constexpr char kCkptMagic[4] = {'E', 'G', 'R', 'F'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 16;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
void push_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
void push_f64(std::vector<std::uint8_t>& out, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xFF));
}
double read_f64(const std::uint8_t* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

void push_header(std::vector<std::uint8_t>& out, const char magic[4],
                 const ModelConfig& cfg) {
  out.insert(out.end(), magic, magic + 4);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(cfg.cell));
  push_u16(out, static_cast<std::uint16_t>(cfg.input_bins));
  push_u16(out, static_cast<std::uint16_t>(cfg.recurrent[0]));
  push_u16(out, static_cast<std::uint16_t>(cfg.recurrent[1]));
  push_u16(out, static_cast<std::uint16_t>(cfg.dense));
  push_u16(out, static_cast<std::uint16_t>(cfg.num_classes));
}

// Validates magic and version and recovers the config. Structure and length
// checks that depend on the payload shape stay with the callers.
ModelConfig parse_header(std::span<const std::uint8_t> bytes, const char magic[4]) {
  if (bytes.size() < kHeaderSize + 4) {
    throw ModelError(ModelError::Kind::kBadLength,
                     "file of " + std::to_string(bytes.size()) + " bytes is too short");
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw ModelError(ModelError::Kind::kBadMagic, "bad magic");
  }
  if (bytes[4] != kVersion) {
    throw ModelError(ModelError::Kind::kBadVersion,
                     "unsupported version " + std::to_string(bytes[4]));
  }
  if (bytes[5] > 2) {
    throw ModelError(ModelError::Kind::kUnsupported,
                     "unknown cell kind " + std::to_string(bytes[5]));
  }
  ModelConfig cfg;
  cfg.cell = static_cast<CellKind>(bytes[5]);
  cfg.input_bins = read_u16(bytes.data() + 6);
  cfg.recurrent[0] = read_u16(bytes.data() + 8);
  cfg.recurrent[1] = read_u16(bytes.data() + 10);
  cfg.dense = read_u16(bytes.data() + 12);
  cfg.num_classes = read_u16(bytes.data() + 14);
  if (cfg.input_bins == 0 || cfg.recurrent[0] == 0 || cfg.recurrent[1] == 0 ||
      cfg.dense == 0 || cfg.num_classes == 0) {
    throw ModelError(ModelError::Kind::kBadLength, "zero dimension in header");
  }
  return cfg;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelError(ModelError::Kind::kBadLength, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ModelError(ModelError::Kind::kBadLength, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw ModelError(ModelError::Kind::kBadLength, "short write to " + path.string());
  }
}

}  // namespace

std::size_t model_file_size(const ModelConfig& cfg) {
  std::size_t payload = 0;
  for (const auto& t : model_layout(cfg)) payload += packed_size(t.count);
  return kHeaderSize + payload + 4;
}

std::vector<std::uint8_t> write_model(const ModelConfig& cfg,
                                      std::span<const wcode_t> codes) {
  const auto layout = model_layout(cfg);
  if (codes.size() != param_count(cfg)) {
    throw ModelError(ModelError::Kind::kMismatch,
                     "expected " + std::to_string(param_count(cfg)) + " codes, got " +
                         std::to_string(codes.size()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(model_file_size(cfg));
  push_header(out, kModelMagic, cfg);
  for (const auto& t : layout) {
    const PackedWeights packed = pack(codes.subspan(t.offset, t.count));
    out.insert(out.end(), packed.bytes.begin(), packed.bytes.end());
  }
  push_u32(out, crc32(out));
  return out;
}

void write_model_file(const std::filesystem::path& path, const ModelConfig& cfg,
                      std::span<const wcode_t> codes) {
  write_file(path, write_model(cfg, codes));
}

LoadedModel read_model(std::span<const std::uint8_t> bytes) {
  LoadedModel m;
  m.config = parse_header(bytes, kModelMagic);
  const std::size_t expected = model_file_size(m.config);
  if (bytes.size() != expected) {
    throw ModelError(ModelError::Kind::kBadLength,
                     "file is " + std::to_string(bytes.size()) + " bytes, header implies " +
                         std::to_string(expected));
  }
  const std::uint32_t declared = read_u32(bytes.data() + bytes.size() - 4);
  if (crc32(bytes.first(bytes.size() - 4)) != declared) {
    throw ModelError(ModelError::Kind::kBadCrc, "checksum mismatch");
  }
  m.codes.reserve(param_count(m.config));
  std::size_t pos = kHeaderSize;
  for (const auto& t : model_layout(m.config)) {
    PackedWeights packed;
    packed.count = t.count;
    const std::size_t n = packed_size(t.count);
    packed.bytes.assign(bytes.begin() + pos, bytes.begin() + pos + n);
    pos += n;
    const auto codes = unpack(packed);
    if (!codes) {
      throw ModelError(ModelError::Kind::kBadCode,
                       "invalid weight encoding in tensor " + t.name);
    }
    m.codes.insert(m.codes.end(), codes->begin(), codes->end());
  }
  return m;
}

LoadedModel read_model_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return read_model(bytes);
  } catch (const ModelError& e) {
    throw ModelError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> write_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.params.size() != param_count(ckpt.config)) {
    throw ModelError(ModelError::Kind::kMismatch,
                     "expected " + std::to_string(param_count(ckpt.config)) +
                         " parameters, got " + std::to_string(ckpt.params.size()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 20 + 8 * ckpt.params.size() + 4);
  push_header(out, kCkptMagic, ckpt.config);
  push_u32(out, static_cast<std::uint32_t>(ckpt.epoch));
  push_f64(out, ckpt.val_loss);
  push_f64(out, ckpt.val_acc);
  for (const double v : ckpt.params) push_f64(out, v);
  push_u32(out, crc32(out));
  return out;
}

void write_checkpoint_file(const std::filesystem::path& path,
                           const Checkpoint& ckpt) {
  write_file(path, write_checkpoint(ckpt));
}

Checkpoint read_checkpoint(std::span<const std::uint8_t> bytes) {
  Checkpoint ckpt;
  ckpt.config = parse_header(bytes, kCkptMagic);
  const std::size_t n = param_count(ckpt.config);
  const std::size_t expected = kHeaderSize + 20 + 8 * n + 4;
  if (bytes.size() != expected) {
    throw ModelError(ModelError::Kind::kBadLength,
                     "file is " + std::to_string(bytes.size()) + " bytes, header implies " +
                         std::to_string(expected));
  }
  const std::uint32_t declared = read_u32(bytes.data() + bytes.size() - 4);
  if (crc32(bytes.first(bytes.size() - 4)) != declared) {
    throw ModelError(ModelError::Kind::kBadCrc, "checksum mismatch");
  }
  ckpt.epoch = static_cast<int>(read_u32(bytes.data() + kHeaderSize));
  ckpt.val_loss = read_f64(bytes.data() + kHeaderSize + 4);
  ckpt.val_acc = read_f64(bytes.data() + kHeaderSize + 12);
  ckpt.params.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ckpt.params[i] = read_f64(bytes.data() + kHeaderSize + 20 + 8 * i);
  }
  return ckpt;
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return read_checkpoint(bytes);
  } catch (const ModelError& e) {
    throw ModelError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace egru
