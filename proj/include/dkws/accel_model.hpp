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
 * Accelerator cost model: turns per-frame MAC and weight-touch counts into
 * cycles and energy for an 8-MAC, 125 kHz datapath whose weight memory
 * returns two int8 weights per 16-bit read.
 *
 *   cycles(frame) = ceil(MACs / macs_parallel) + cycles_frame_fixed
 *   reads(frame)  = ceil(weights_touched / 2)
 *   energy(frame) = MACs*e_mac + reads*e_read + e_frame_fixed + e_fex_frame
 *
 * Latency is reported per frame (mean over the utterance); energy per
 * decision is the sum over all frames.
 */

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "dkws/delta_gru.hpp"

namespace dkws::accel {

struct CostModel {
  int macs_parallel = 8;
  int clock_hz = 125000;
  double e_mac_nj = 0.0;
  double e_read_nj = 0.0;
  double e_frame_fixed_nj = 0.0;
  std::int64_t cycles_frame_fixed = 0;
  double e_fex_frame_nj = 0.0;     // at fex_reference_channels enabled channels
  int fex_reference_channels = 10;

  friend bool operator==(const CostModel &, const CostModel &) = default;
};

/// Throws dkws::Error(validation) for negative parameters or zero
/// parallelism / clock.
void validate(const CostModel &cm);

std::int64_t frame_cycles(const gru::FrameStats &frame, const CostModel &cm);
std::int64_t weight_reads(const gru::FrameStats &frame);

struct EnergyBreakdown {
  double mac_nj = 0.0;
  double read_nj = 0.0;
  double fixed_nj = 0.0;
  double fex_nj = 0.0;

  double total() const { return mac_nj + read_nj + fixed_nj + fex_nj; }
};

struct CostReport {
  int frames = 0;
  std::int64_t macs = 0;
  std::int64_t weight_reads = 0;
  std::int64_t cycles = 0;           // summed over frames
  double latency_ms = 0.0;           // mean per frame
  double energy_nj = 0.0;            // per decision (all frames)
  EnergyBreakdown energy;
};

/// fex_channels scales the FEx energy linearly; -1 means the reference count.
CostReport evaluate(const gru::UtteranceStats &stats, const CostModel &cm, int fex_channels = -1);
double decision_energy(const gru::UtteranceStats &stats, const CostModel &cm, int fex_channels = -1);

/// A measured (or queried) operating point.
struct OperatingPoint {
  double latency_ms = 0.0;  // per frame
  double energy_nj = 0.0;   // per decision
  double sparsity = 0.0;    // temporal sparsity over all delta elements
};

/// Paper reference points: dense 16.4 ms / 121.2 nJ, 87% sparsity 6.9 ms / 36.11 nJ.
OperatingPoint paper_dense_point();
OperatingPoint paper_sparse_point();

/// Expected per-frame MACs at a given temporal sparsity (continuous):
/// 3*n_hid*(n_in + n_hid)*(1 - s) + n_hid*n_out.
double expected_macs(const gru::Dims &dims, double sparsity);

/// Model prediction at a sparsity level using expected (continuous) counts.
/// At sparsity 0 the counts are integers and match evaluate() exactly.
OperatingPoint predict(const CostModel &cm, const gru::Dims &dims, double sparsity, int frames);

struct CalibrationSetup {
  gru::Dims dims;
  int frames = 62;  // 1 s utterance at 16 ms frames
};

struct CalibrationResult {
  CostModel model;
  double bundle_nj_per_mac = 0.0;      // e_mac + e_read / 2
  double frame_constant_nj = 0.0;      // e_frame_fixed + e_fex_frame
  double dense_macs = 0.0;
  double sparse_macs = 0.0;
  OperatingPoint dense_predicted;
  OperatingPoint sparse_predicted;
  double dense_latency_residual = 0.0;   // (predicted - target) / target
  double dense_energy_residual = 0.0;
  double sparse_latency_residual = 0.0;
  double sparse_energy_residual = 0.0;
};

/// Solves the affine energy model exactly through both points, splits the
/// per-MAC bundle between e_mac and e_read in the template's ratio (half each
/// when the template has neither), keeps the template's FEx energy, and fits
/// cycles_frame_fixed to the dense latency. The cycle model has one free
/// parameter, so the sparse latency is reported as a residual.
/// Throws dkws::Error(numeric) when the points coincide in sparsity or the
/// fit needs negative energies.
CalibrationResult calibrate(const OperatingPoint &dense, const OperatingPoint &sparse, const CostModel &tmpl,
                            const CalibrationSetup &setup = {});

void write_cost_model(std::ostream &out, const CostModel &cm, const CalibrationResult *calibration = nullptr);
CostModel read_cost_model(std::istream &in, const std::string &source = "<cost-model>");
void save_cost_model(const std::string &path, const CostModel &cm, const CalibrationResult *calibration = nullptr);
CostModel load_cost_model(const std::string &path);

}  // namespace dkws::accel
