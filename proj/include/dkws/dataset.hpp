/*
 * Copyright (C) 2026 The dkws Authors. All rights reserved.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the License); you may
 * not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an AS IS BASIS, WITHOUT
 * WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * Speech Commands ingestion: strict WAV parsing, 16 kHz -> 8 kHz
 * decimation, 12-bit quantization, label mapping, deterministic splits and
 * the preprocessed-utterance cache.
 */

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dkws::data {

inline constexpr int kTargetRate = 8000;
inline constexpr int kUtteranceSamples = 8000;  // exactly 1 s at 8 kHz
inline constexpr int kResamplerTaps = 31;
inline constexpr int kResamplerFracBits = 15;

// --- WAV ------------------------------------------------------------------------

struct WavData {
  int sample_rate = 0;
  std::vector<std::int16_t> samples;
};

/// RIFF/WAVE, PCM format 1, mono, 16-bit only. Unknown chunks are skipped.
/// Throws dkws::Error(format) on anything malformed or truncated.
WavData parse_wav(std::span<const std::uint8_t> bytes);
/// Canonical 44-byte-header encoding.
std::vector<std::uint8_t> encode_wav(int sample_rate, std::span<const std::int16_t> samples);
WavData load_wav(const std::string &path);
void save_wav(const std::string &path, int sample_rate, std::span<const std::int16_t> samples);

// --- signal preparation ---------------------------------------------------------

/// Q{16,15} Hamming-windowed sinc, cutoff 4 kHz at 16 kHz, taps summing to 2^15.
const std::array<std::int16_t, kResamplerTaps> &resampler_taps();
/// Filter, keep every other sample (output n <-> input 2n): ceil(n/2) outputs.
std::vector<std::int16_t> resample_16k_to_8k(std::span<const std::int16_t> samples);
/// Arithmetic shift right by 4 with round-half-even, saturated to [-2048, 2047].
std::vector<std::int16_t> quantize_12b(std::span<const std::int16_t> samples);
/// Zero-pad or crop to exactly n samples.
std::vector<std::int16_t> fit_length(std::span<const std::int16_t> samples, std::size_t n = kUtteranceSamples);
/// Full chain for one clip: decimate if 16 kHz, quantize, fit to 1 s.
/// dkws::Error(validation) for sample rates other than 8 or 16 kHz.
std::vector<std::int16_t> prepare_utterance(const WavData &wav);

// --- labels -----------------------------------------------------------------------

inline constexpr int kNumClasses = 12;
inline constexpr int kSilence = 0;
inline constexpr int kUnknown = 1;
inline constexpr std::array<std::string_view, kNumClasses> kLabelNames{
    "Silence", "Unknown", "Down", "Go", "Left", "No", "Off", "On", "Right", "Stop", "Up", "Yes"};

/// Case-insensitive name -> id; -1 when unknown.
int label_id(std::string_view name);
std::string_view label_name(int id);
/// Folder word -> class: keyword id, or kUnknown for any other word.
int word_label(std::string_view word);
/// Maps a 12-class id to the 11-class task (Unknown removed); -1 for Unknown.
int to_11_class(int label12);

// --- splits -------------------------------------------------------------------------

enum class Split { train, val, test };
std::string_view split_name(Split s);

struct UtteranceRef {
  std::string path;           // relative to the dataset root; background file for Silence
  int label = 0;
  std::string word;           // folder name ("_silence_" for Silence crops)
  Split split = Split::train;
  std::int64_t noise_offset = -1;  // Silence: first sample of the 1 s crop (source rate)
};

struct SplitPlan {
  std::vector<UtteranceRef> train, val, test;

  const std::vector<UtteranceRef> &get(Split s) const;
  std::vector<UtteranceRef> &get(Split s);
};

struct DatasetOptions {
  std::uint64_t seed = 0;
  double silence_fraction = 0.10;  // of each final split
  bool balance_unknown = true;     // Unknown down-sampled to the mean keyword count
  bool include_train = true;
};

/// Deterministic split assignment from validation_list.txt / testing_list.txt
/// (train = everything else). dkws::Error(io) for missing lists or root,
/// dkws::Error(validation) when a class ends up empty in a planned split.
SplitPlan plan_splits(const std::string &root, const DatasetOptions &options = {});

struct Utterance {
  std::vector<std::int16_t> samples;  // 12-bit values at 8 kHz, exactly 8000
  int label = 0;
  std::string word;
  Split split = Split::train;
  std::string source;
};

Utterance load_utterance(const std::string &root, const UtteranceRef &ref);

/// Loads every planned utterance of one split; `workers` threads read files
/// concurrently, output order always follows the plan.
std::vector<Utterance> load_split(const std::string &root, const std::vector<UtteranceRef> &refs, int workers = 1);

/// 64-bit FNV-1a content hash of the prepared samples.
std::uint64_t content_hash(std::span<const std::int16_t> samples);

/// Descriptions of utterances whose content hash appears in more than one
/// split (empty when the splits are disjoint).
std::vector<std::string> find_leaks(const std::vector<Utterance> &a, const std::vector<Utterance> &b);

// --- cache ----------------------------------------------------------------------------

inline constexpr std::uint16_t kCacheVersion = 1;

struct CachedUtterance {
  int label = 0;
  std::vector<std::int16_t> samples;
};

/// "DKWC" | u16 version | u32 count | count x {u8 label, 8000 x i16 LE}.
std::vector<std::uint8_t> encode_cache(std::span<const CachedUtterance> items);
std::vector<CachedUtterance> decode_cache(std::span<const std::uint8_t> bytes);
void save_cache(const std::string &path, std::span<const CachedUtterance> items);
std::vector<CachedUtterance> load_cache(const std::string &path);

}  // namespace dkws::data
