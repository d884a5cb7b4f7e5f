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

#include "dkws/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "dkws/dataset.hpp"
#include "dkws/error.hpp"
#include "dkws/fex.hpp"
#include "dkws/synth.hpp"

namespace dkws::exp {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)> &fn) {
  const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                                      std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto &th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

std::vector<ClipFeatures> compute_features(std::span<const Clip> clips, const design::FilterBank &bank,
                                           int workers) {
  std::vector<ClipFeatures> out(clips.size());
  parallel_for(clips.size(), workers, [&](std::size_t i) {
    const auto frames = fex::extract_features(clips[i].samples, bank);
    out[i].name = clips[i].name;
    out[i].label = clips[i].label;
    out[i].frames.reserve(frames.size());
    for (const auto &f : frames) out[i].frames.push_back(f.values);
  });
  return out;
}

FeatureMatrix expand_columns(const FeatureMatrix &frames, std::span<const int> positions, int width) {
  for (int p : positions) {
    if (p < 0 || p >= width) throw std::invalid_argument(fmt::format("column position {} outside 0..{}", p, width - 1));
  }
  FeatureMatrix out;
  out.reserve(frames.size());
  for (const auto &row : frames) {
    if (row.size() != positions.size()) {
      throw std::invalid_argument(
          fmt::format("row has {} columns but {} positions were given", row.size(), positions.size()));
    }
    std::vector<std::int32_t> wide(static_cast<std::size_t>(width), 0);
    for (std::size_t k = 0; k < row.size(); ++k) wide[static_cast<std::size_t>(positions[k])] = row[k];
    out.push_back(std::move(wide));
  }
  return out;
}

std::vector<Clip> synthetic_clips(int count, std::uint64_t seed) {
  std::vector<Clip> clips;
  for (int i = 0; i < std::max(count, 0); ++i) {
    const int label = i % data::kNumClasses;
    data::WavData wav{16000, synth::utterance(label, seed + static_cast<std::uint64_t>(i))};
    clips.push_back(Clip{fmt::format("synth_{:04d}_{}", i, data::label_name(label)), label,
                         data::prepare_utterance(wav)});
  }
  return clips;
}

UtteranceOutcome evaluate_utterance(const FeatureMatrix &frames, double theta, const gru::NetworkWeights &w,
                                    const accel::CostModel *cm, int fex_channels) {
  auto result = gru::run_inference(frames, theta, w);
  UtteranceOutcome o;
  o.decision = result.decision;
  o.decision_11 = w.dims.n_out > data::kUnknown ? gru::argmax_excluding(result.logit_sum, data::kUnknown)
                                                : result.decision;
  if (cm != nullptr) o.cost = accel::evaluate(result.stats, *cm, fex_channels);
  o.stats = std::move(result.stats);
  return o;
}

std::vector<ThetaRow> sweep_theta(std::span<const ClipFeatures> clips, const gru::NetworkWeights &w,
                                  std::span<const double> thetas, const accel::CostModel *cm, int fex_channels,
                                  int workers) {
  std::vector<ThetaRow> rows;
  for (double theta : thetas) {
    std::vector<UtteranceOutcome> outcomes(clips.size());
    parallel_for(clips.size(), workers, [&](std::size_t i) {
      outcomes[i] = evaluate_utterance(clips[i].frames, theta, w, cm, fex_channels);
      outcomes[i].stats.per_frame.clear();  // keep memory flat on large splits
    });
    ThetaRow row;
    row.theta = theta;
    row.utterances = static_cast<int>(clips.size());
    row.has_cost = cm != nullptr;
    int correct = 0, correct_11 = 0;
    std::int64_t elements = 0;
    double latency_sum = 0.0, energy_sum = 0.0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      const auto &o = outcomes[i];
      const int label = clips[i].label;
      if (label >= 0) {
        ++row.labeled;
        correct += o.decision == label ? 1 : 0;
        if (label != data::kUnknown) {
          ++row.labeled_11;
          correct_11 += o.decision_11 == label ? 1 : 0;
        }
      }
      row.fired += o.stats.fired_x + o.stats.fired_h;
      elements += static_cast<std::int64_t>(o.stats.frames) * (o.stats.n_in + o.stats.n_hid);
      row.macs += o.stats.macs;
      if (o.cost) {
        row.weight_reads += o.cost->weight_reads;
        row.cycles += o.cost->cycles;
        latency_sum += o.cost->latency_ms;
        energy_sum += o.cost->energy_nj;
      }
    }
    row.accuracy_12 = row.labeled > 0 ? static_cast<double>(correct) / row.labeled : 0.0;
    row.accuracy_11 = row.labeled_11 > 0 ? static_cast<double>(correct_11) / row.labeled_11 : 0.0;
    row.sparsity = elements > 0 ? 1.0 - static_cast<double>(row.fired) / static_cast<double>(elements) : 0.0;
    if (!clips.empty()) {
      row.mean_latency_ms = latency_sum / static_cast<double>(clips.size());
      row.mean_energy_nj = energy_sum / static_cast<double>(clips.size());
    }
    rows.push_back(row);
  }
  return rows;
}

double feature_snr_db(const design::FilterBank &bank, const design::FilterBank &reference,
                      std::span<const Clip> clips) {
  if (bank.enabled_indices() != reference.enabled_indices()) {
    throw std::invalid_argument("feature_snr_db: banks enable different channels");
  }
  double signal = 0.0, noise = 0.0;
  for (const auto &clip : clips) {
    const auto a = fex::extract_features(clip.samples, bank);
    const auto r = fex::extract_features(clip.samples, reference);
    for (std::size_t t = 0; t < std::min(a.size(), r.size()); ++t) {
      for (std::size_t k = 0; k < r[t].values.size(); ++k) {
        const double ref = r[t].values[k];
        const double err = static_cast<double>(a[t].values[k]) - ref;
        signal += ref * ref;
        noise += err * err;
      }
    }
  }
  if (noise == 0.0) return kMaxSnrDb;
  if (signal == 0.0) return 0.0;
  return std::min(kMaxSnrDb, 10.0 * std::log10(signal / noise));
}

}  // namespace dkws::exp
