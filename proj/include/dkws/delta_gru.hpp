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
 * Delta-gated GRU (n_in -> n_hid) with a dense fully connected classifier
 * (n_hid -> n_out), its bit-exact dense oracle and per-frame statistics.
 *
 * Numerics
 *   activations  Q{16,14} raw integers (features, hidden state, gates)
 *   weights      int8 with a per-matrix exponent: real = w * 2^scale_exp
 *   accumulators int32, one unit per gate: 2^(e_min - 14), where e_min is the
 *                smaller exponent of the gate's input and recurrent matrix;
 *                the other matrix's products are shifted left by the
 *                exponent difference. Biases are stored in these units.
 *
 * GRU variant (reset gate on the recurrent product):
 *   r = sig(M_r), u = sig(M_u), c = tanh(M_xc + r * M_hc)
 *   h' = (1 - u) * h + u * c
 * The delta form keeps M_r, M_u, M_xc, M_hc as running sums and only adds
 * the columns of elements whose change exceeds the threshold.
 */

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace dkws::gru {

inline constexpr int kDefaultInputs = 10;
inline constexpr int kDefaultHidden = 64;
inline constexpr int kDefaultOutputs = 12;
inline constexpr int kMaxInputs = 16;
inline constexpr int kMaxHidden = 256;
inline constexpr int kMaxOutputs = 64;

// Nonlinearity tables: index k in [-128, 127] is the pre-activation rounded
// onto a 1/16 grid, covering [-8, 8).
inline constexpr int kTableSize = 256;
inline constexpr int kTableGridBits = 4;

struct Dims {
  int n_in = kDefaultInputs;
  int n_hid = kDefaultHidden;
  int n_out = kDefaultOutputs;

  friend bool operator==(const Dims &, const Dims &) = default;
};

enum class MatrixId : std::uint8_t { W_xr = 0, W_xu = 1, W_xc = 2, W_hr = 3, W_hu = 4, W_hc = 5, W_fc = 6 };
enum class BiasId : std::uint8_t { b_r = 16, b_u = 17, b_c = 18, b_fc = 19 };

struct WeightMatrix {
  int rows = 0;
  int cols = 0;
  int scale_exp = 0;               // real weight = int8 * 2^scale_exp
  std::vector<std::int8_t> data;   // row-major

  std::int8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  friend bool operator==(const WeightMatrix &, const WeightMatrix &) = default;
};

struct NetworkWeights {
  Dims dims;
  WeightMatrix W_xr, W_xu, W_xc;  // n_hid x n_in
  WeightMatrix W_hr, W_hu, W_hc;  // n_hid x n_hid
  WeightMatrix W_fc;              // n_out x n_hid
  std::vector<std::int32_t> b_r, b_u, b_c;  // n_hid, gate accumulator units
  std::vector<std::int32_t> b_fc;           // n_out, 2^(W_fc.scale_exp - 14) units

  WeightMatrix &matrix(MatrixId id);
  const WeightMatrix &matrix(MatrixId id) const;
  std::vector<std::int32_t> &bias(BiasId id);
  const std::vector<std::int32_t> &bias(BiasId id) const;

  friend bool operator==(const NetworkWeights &, const NetworkWeights &) = default;
};

/// Shapes, exponent range and accumulator headroom: for every row,
/// sum(|w| * 2^15 * 2^shift) + |b| < 2^31, which guarantees the int32
/// accumulators never saturate and so delta and dense results agree exactly.
/// Throws dkws::Error(validation).
void validate_weights(const NetworkWeights &w);

/// Seeded random weights that pass validate_weights. Portable: uses only the
/// raw output of std::mt19937_64.
NetworkWeights random_weights(const Dims &dims, std::uint64_t seed);

/// Quantized nonlinearities on the activation grid, shared bit-exactly by the
/// delta engine and the dense oracle.
struct Nonlinearity {
  std::array<std::int32_t, kTableSize> sigmoid{};
  std::array<std::int32_t, kTableSize> tanh{};
};
const Nonlinearity &tables();

/// Table index for accumulator value m with unit 2^(e_min - 14).
int table_index(std::int64_t m, int e_min);
std::int32_t sigmoid_q(std::int64_t m, int e_min);
std::int32_t tanh_q(std::int64_t m, int e_min);

/// Threshold on the activation grid: RNE(theta * 2^14). Throws
/// std::invalid_argument for negative or NaN theta; +inf maps to INT32_MAX.
std::int32_t quantize_theta(double theta);

struct DeltaResult {
  std::vector<std::int32_t> delta;
  std::vector<bool> fired;
  int n_fired = 0;
};
/// Fires where |v - v_hat| > theta_raw; updates v_hat in place for fired elements.
DeltaResult delta_encode(std::span<const std::int32_t> v, std::vector<std::int32_t> &v_hat, std::int32_t theta_raw);

struct DeltaState {
  std::vector<std::int32_t> x_hat, h_hat, h_prev;
  std::vector<std::int32_t> M_r, M_u, M_xc, M_hc;

  /// x_hat = h_hat = h_prev = 0, M_r = b_r, M_u = b_u, M_xc = b_c, M_hc = 0.
  static DeltaState initial(const NetworkWeights &w);
};

struct FrameStats {
  int fired_x = 0;
  int fired_h = 0;
  std::int64_t macs = 0;             // 3*n_hid*(fired_x + fired_h) + n_hid*n_out
  std::int64_t weights_touched = 0;  // one weight per MAC

  friend bool operator==(const FrameStats &, const FrameStats &) = default;
};

/// One delta step. x is on the activation grid (n_in values). Returns h'.
std::vector<std::int32_t> delta_gru_step(DeltaState &state, std::span<const std::int32_t> x, std::int32_t theta_raw,
                                         const NetworkWeights &w, FrameStats *stats = nullptr);

/// Reference dense step: full matrix products from x and h.
std::vector<std::int32_t> gru_step_dense(std::span<const std::int32_t> x, std::span<const std::int32_t> h,
                                         const NetworkWeights &w);

/// logits = W_fc h + b_fc, int32 accumulators; always dense.
std::vector<std::int32_t> fc_forward(std::span<const std::int32_t> h, const NetworkWeights &w);

struct UtteranceStats {
  int frames = 0;
  int n_in = 0;
  int n_hid = 0;
  std::int64_t fired_x = 0;
  std::int64_t fired_h = 0;
  std::int64_t macs = 0;
  std::int64_t weights_touched = 0;
  std::vector<FrameStats> per_frame;

  /// 1 - (fired_x + fired_h) / ((n_in + n_hid) * frames).
  double temporal_sparsity() const;
  double input_sparsity() const;
  double hidden_sparsity() const;
};

struct InferenceResult {
  int decision = 0;                       // argmax of summed logits, lowest index on ties
  std::vector<std::int64_t> logit_sum;    // sum over frames (argmax equals that of the mean)
  std::vector<std::vector<std::int32_t>> logits_trace;  // filled when requested
  std::vector<std::vector<std::int32_t>> hidden_trace;  // filled when requested
  UtteranceStats stats;
};

struct InferenceOptions {
  bool keep_trace = false;
  bool dense = false;  // use the dense oracle instead of the delta engine
};

/// Features are raw 12-bit values (kFeatureFormat), one row per frame,
/// n_in columns each. Throws dkws::Error(validation) on empty input or a
/// width mismatch.
InferenceResult run_inference(std::span<const std::vector<std::int32_t>> features, double theta,
                              const NetworkWeights &w, const InferenceOptions &options = {});

/// argmax over the logits, skipping `excluded` (pass -1 to skip nothing).
int argmax_excluding(std::span<const std::int64_t> logits, int excluded);

}  // namespace dkws::gru
