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
 * Serial time-domain feature extractor: every enabled channel runs its two
 * biquads on each sample through one time-multiplexed datapath, followed by
 * a full-wave envelope detector. At each frame end the envelope is log
 * compressed, offset/scaled and clamped into a 12-bit feature.
 */

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dkws/filter_design.hpp"
#include "dkws/fixed_point.hpp"

namespace dkws::fex {

inline constexpr int kFrameLength = 128;  // 16 ms at 8 kHz, window = shift

/// Delay registers of one transposed direct-form II section, kStateFormat raw.
struct BiquadState {
  std::int64_t s1 = 0;
  std::int64_t s2 = 0;
};

/// One section update; x is rescaled into kStateFormat first and the output
/// is in kStateFormat. When b2 == -b0 the b0 product is reused (negated), and
/// coefficients with a CSD list use shift_mul.
FixedValue biquad_step(FixedValue x, const design::QuantizedSOS &coeffs, BiquadState &state);

/// env' = env + sign(d) * ceil(|d| / 2^alpha_shift), d = |y| - env, saturating
/// in kStateFormat. Throws std::invalid_argument for alpha_shift < 1.
FixedValue envelope_detect(FixedValue y, FixedValue env, int alpha_shift);

/// log2 of a positive raw integer in kLogFormat: leading-one position plus a
/// 64-entry table lookup on the next 6 bits. Throws std::invalid_argument
/// for raw < 1.
FixedValue log2_approx(std::int64_t raw);

/// clamp[0, 4095](scale * (log2_approx(max(env, 1)) - offset)) in
/// kFeatureFormat. offset is kLogFormat, scale kScaleFormat.
FixedValue post_process(FixedValue env, FixedValue offset, FixedValue scale);

/// Structural arithmetic counts of the shared datapath.
struct OpCounts {
  std::uint64_t multiplies = 0;
  std::uint64_t shifts = 0;
  std::uint64_t additions = 0;  // adders, subtractors, comparisons, |.|

  std::uint64_t total() const { return multiplies + shifts + additions; }
  OpCounts &operator+=(const OpCounts &o);
  friend bool operator==(const OpCounts &, const OpCounts &) = default;
};

/// Per enabled channel: ops per input sample and per emitted frame.
struct ChannelCost {
  OpCounts per_sample;
  OpCounts per_frame;
};
ChannelCost channel_cost(const design::FilterBank &bank);

struct FeatureFrame {
  int t = 0;
  std::vector<std::int32_t> values;  // raw kFeatureFormat, one per enabled channel
};

/// Streaming extractor for one audio stream. Not thread-safe; use one
/// instance per stream.
class FeatureExtractor {
 public:
  /// Throws dkws::Error(validation) if no channel is enabled.
  explicit FeatureExtractor(design::FilterBank bank);

  /// Feeds one 12-bit sample (kSampleFormat raw, -2048..2047). Returns a
  /// frame at every 128th sample. Throws std::invalid_argument out of range.
  std::optional<FeatureFrame> push(std::int32_t sample);

  void reset();
  const OpCounts &ops() const { return ops_; }
  const design::FilterBank &bank() const { return bank_; }
  const std::vector<int> &channels() const { return enabled_; }

 private:
  design::FilterBank bank_;
  std::vector<int> enabled_;
  ChannelCost cost_;
  std::vector<std::array<BiquadState, 2>> state_;
  std::vector<std::int64_t> env_;
  int phase_ = 0;
  int frame_index_ = 0;
  OpCounts ops_;
};

/// Whole-stream convenience: floor(n / 128) frames. Empty input gives no frames.
std::vector<FeatureFrame> extract_features(std::span<const std::int16_t> samples, const design::FilterBank &bank,
                                           OpCounts *ops = nullptr);

/// Copy of the bank with only the masked channels enabled. Throws
/// std::invalid_argument for an empty mask or bits beyond the bank.
design::FilterBank select_channels(const design::FilterBank &bank, std::uint32_t mask);

// --- feature CSV --------------------------------------------------------------

/// Header names the enabled channels' centers ("ch03_586.4Hz"); one row per
/// frame of raw 12-bit integers.
void write_feature_csv(std::ostream &out, const design::FilterBank &bank, std::span<const FeatureFrame> frames);
void save_feature_csv(const std::string &path, const design::FilterBank &bank, std::span<const FeatureFrame> frames);

struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<FeatureFrame> frames;
};

/// Throws dkws::Error(format) on ragged rows, non-integers or values outside
/// 0..4095.
FeatureTable read_feature_csv(std::istream &in, const std::string &source = "<features>");
FeatureTable load_feature_csv(const std::string &path);

}  // namespace dkws::fex
