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
#include <string>
#include <vector>

#include "egru/fixedpoint.hpp"

namespace egru {

inline constexpr int kSampleRate = 8000;
inline constexpr int kFrameSamples = 128;  // rectangular window, no overlap
inline constexpr int kSpectrumBins = 64;   // DFT bins 0..63, Nyquist dropped

struct AudioClip {
  std::vector<std::int16_t> samples;  // mono PCM
  int sample_rate = 0;
};

// Column-per-frame magnitude spectrogram. Values are |X_k| / 128 clamped to
// [0, 1 - 2^-15] and stored as Q15, so float and integer consumers read the
// exact same numbers. Storage is frame-major: frame t occupies
// values[t * bins .. t * bins + bins).
struct Spectrogram {
  int bins = kSpectrumBins;
  int frames = 0;
  std::vector<q15_t> values;

  std::span<const q15_t> frame(int t) const {
    return {values.data() + static_cast<std::size_t>(t) * bins,
            static_cast<std::size_t>(bins)};
  }
};

struct LabeledExample {
  Spectrogram spec;
  int label = 0;
  std::string source_id;
};

struct LabeledDataset {
  std::vector<LabeledExample> examples;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  int frames() const { return examples.empty() ? 0 : examples[0].spec.frames; }
};

// RIFF/WAVE PCM decoder: 8- or 16-bit integer PCM, any channel count
// (channels are averaged to mono). Throws DataError on malformed bytes,
// naming expected vs actual sizes where that is the failure.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);
AudioClip decode_wav_file(const std::filesystem::path& path);

// Resample to 8 kHz. Rates below 8 kHz are rejected. Integer ratios use an
// m-point moving average before taking every m-th sample, which delays the
// signal by (m-1)/2 input samples; other ratios use linear interpolation.
AudioClip resample_8k(const AudioClip& clip);

// Magnitude STFT of an 8 kHz clip, zero-padded or truncated to exactly
// target_frames frames of 128 samples.
Spectrogram stft_features(const AudioClip& clip, int target_frames);

// Three-way synthetic acoustic event source, byte-deterministic per seed:
//   class 0 "burst": exponentially damped tone at a random onset
//   class 1 "chirp": linear frequency sweep at a random onset
//   class 2 "hiss":  one-pole low-pass noise bed
// Every clip also carries a class-independent noise tail so that a model
// must retain early evidence rather than score the final frames.
LabeledDataset synth_dataset(int per_class, std::uint64_t seed);

// Per-file decode failures are collected here; loading only throws if
// nothing decodable remains.
struct LoadReport {
  std::vector<std::string> file_errors;
};

// root/<class_name>/*.wav, classes ordered by sorted directory name.
LabeledDataset load_dir(const std::filesystem::path& root, int target_frames,
                        LoadReport* report = nullptr);

// CSV manifest with lines "path,label"; paths are relative to the manifest.
LabeledDataset load_manifest(const std::filesystem::path& csv_path,
                             int target_frames, LoadReport* report = nullptr);

// Dataset container serialization (see docs/FORMATS.md).
std::vector<std::uint8_t> write_dataset(const LabeledDataset& ds);
void write_dataset_file(const std::filesystem::path& path,
                        const LabeledDataset& ds);
LabeledDataset read_dataset(std::span<const std::uint8_t> bytes);
LabeledDataset read_dataset_file(const std::filesystem::path& path);

}  // namespace egru
