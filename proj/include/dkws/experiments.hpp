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
 * Experiment drivers shared by the CLI and the acceptance suite: feature
 * extraction over clip lists, threshold sweeps with accuracy / sparsity /
 * cost aggregation, input-column masking and the precision-sweep metric.
 *
 * Parallelism is per utterance only; every result is written to a slot
 * indexed by utterance and aggregated in index order, so outputs are
 * bit-identical for any worker count.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dkws/accel_model.hpp"
#include "dkws/delta_gru.hpp"
#include "dkws/filter_design.hpp"

namespace dkws::exp {

/// Runs fn(i) for i in [0, n) on up to `workers` threads (strided). The first
/// exception thrown by any task is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)> &fn);

struct Clip {
  std::string name;
  int label = -1;                     // 12-class id, -1 when unknown (unlabeled WAV)
  std::vector<std::int16_t> samples;  // 12-bit values at 8 kHz
};

using FeatureMatrix = std::vector<std::vector<std::int32_t>>;  // frames x channels, raw 12-bit

struct ClipFeatures {
  std::string name;
  int label = -1;
  FeatureMatrix frames;
};

std::vector<ClipFeatures> compute_features(std::span<const Clip> clips, const design::FilterBank &bank,
                                           int workers = 1);

/// Places the columns of `frames` at `positions` in rows of `width` zeros:
/// input-column masking of a wider model.
FeatureMatrix expand_columns(const FeatureMatrix &frames, std::span<const int> positions, int width);

/// Deterministic synthetic clips: label = i % 12, seed = seed + i.
std::vector<Clip> synthetic_clips(int count, std::uint64_t seed);

struct ThetaRow {
  double theta = 0.0;
  int utterances = 0;
  int labeled = 0;        // utterances with a label (12-class denominator)
  int labeled_11 = 0;     // labeled utterances that are not Unknown
  double accuracy_12 = 0.0;
  double accuracy_11 = 0.0;
  double sparsity = 0.0;  // pooled temporal sparsity over all frames
  std::int64_t fired = 0;
  std::int64_t macs = 0;
  std::int64_t weight_reads = 0;
  std::int64_t cycles = 0;
  bool has_cost = false;
  double mean_latency_ms = 0.0;  // per frame, averaged over utterances
  double mean_energy_nj = 0.0;   // per decision, averaged over utterances
};

struct UtteranceOutcome {
  int decision = 0;     // 12-class argmax
  int decision_11 = 0;  // argmax with the Unknown logit excluded
  gru::UtteranceStats stats;
  std::optional<accel::CostReport> cost;
};

UtteranceOutcome evaluate_utterance(const FeatureMatrix &frames, double theta, const gru::NetworkWeights &w,
                                    const accel::CostModel *cm, int fex_channels);

/// One row per theta over all clips.
std::vector<ThetaRow> sweep_theta(std::span<const ClipFeatures> clips, const gru::NetworkWeights &w,
                                  std::span<const double> thetas, const accel::CostModel *cm, int fex_channels,
                                  int workers = 1);

/// Feature SNR in dB of `bank` against `reference` over the clips (same
/// enabled channels required), capped at kMaxSnrDb.
inline constexpr double kMaxSnrDb = 100.0;
double feature_snr_db(const design::FilterBank &bank, const design::FilterBank &reference,
                      std::span<const Clip> clips);

}  // namespace dkws::exp
