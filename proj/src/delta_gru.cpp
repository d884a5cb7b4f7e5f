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

#include "dkws/delta_gru.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "dkws/error.hpp"
#include "dkws/fixed_point.hpp"
#include "dkws/formats.hpp"

namespace dkws::gru {

namespace {

constexpr int kActFrac = kActivationFormat.frac_bits();
constexpr std::int64_t kOne = kActivationOne;
constexpr int kMinExp = -24;
constexpr int kMaxExp = 8;
// Largest activation magnitude on the Q{16,14} grid, rounded up to a power of two.
constexpr std::int64_t kActivationBound = std::int64_t{1} << 15;

std::int32_t sat32(std::int64_t v) {
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(v, INT32_MIN, INT32_MAX));
}

std::int64_t rne_shift(std::int64_t v, int shift) { return round_shift_right(v, shift, Rounding::nearest_even); }

// Exponents and left shifts for one gate's pair of matrices.
struct GateScale {
  int e_min = 0;
  int shift_x = 0;
  int shift_h = 0;
};

GateScale gate_scale(const WeightMatrix &wx, const WeightMatrix &wh) {
  GateScale g;
  g.e_min = std::min(wx.scale_exp, wh.scale_exp);
  g.shift_x = wx.scale_exp - g.e_min;
  g.shift_h = wh.scale_exp - g.e_min;
  return g;
}

struct Scales {
  GateScale r, u, c;
};

Scales scales_of(const NetworkWeights &w) {
  return Scales{gate_scale(w.W_xr, w.W_hr), gate_scale(w.W_xu, w.W_hu), gate_scale(w.W_xc, w.W_hc)};
}

// acc[i] += (W[i, col] * value) << shift for every row.
void add_column(std::vector<std::int64_t> &acc, const WeightMatrix &m, int col, std::int64_t value, int shift) {
  for (int i = 0; i < m.rows; ++i) acc[i] += (std::int64_t{m.at(i, col)} * value) << shift;
}

std::vector<std::int64_t> widen(const std::vector<std::int32_t> &v) { return {v.begin(), v.end()}; }

void narrow_into(const std::vector<std::int64_t> &wide, std::vector<std::int32_t> &out) {
  for (std::size_t i = 0; i < wide.size(); ++i) out[i] = sat32(wide[i]);
}

// Gate nonlinearities and state update shared by the delta engine and the oracle.
std::vector<std::int32_t> finish_step(const Scales &s, std::span<const std::int32_t> m_r,
                                      std::span<const std::int32_t> m_u, std::span<const std::int32_t> m_xc,
                                      std::span<const std::int32_t> m_hc, std::span<const std::int32_t> h) {
  std::vector<std::int32_t> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const std::int64_t r = sigmoid_q(m_r[i], s.r.e_min);
    const std::int64_t u = sigmoid_q(m_u[i], s.u.e_min);
    const std::int64_t pre_c = std::int64_t{m_xc[i]} + rne_shift(r * m_hc[i], kActFrac);
    const std::int64_t c = tanh_q(pre_c, s.c.e_min);
    out[i] = static_cast<std::int32_t>(rne_shift((kOne - u) * h[i] + u * c, kActFrac));
  }
  return out;
}

void require(bool ok, const std::string &what) {
  if (!ok) throw Error(ErrorCategory::validation, what);
}

void check_matrix(const WeightMatrix &m, int rows, int cols, const char *name) {
  require(m.rows == rows && m.cols == cols,
          fmt::format("{} is {}x{}, expected {}x{}", name, m.rows, m.cols, rows, cols));
  require(m.data.size() == static_cast<std::size_t>(rows) * cols, fmt::format("{} payload size mismatch", name));
  require(m.scale_exp >= kMinExp && m.scale_exp <= kMaxExp,
          fmt::format("{} scale exponent {} outside {}..{}", name, m.scale_exp, kMinExp, kMaxExp));
}

std::int64_t row_headroom(const WeightMatrix &m, int row, int shift) {
  std::int64_t sum = 0;
  for (int c = 0; c < m.cols; ++c) sum += std::abs(std::int64_t{m.at(row, c)});
  return (sum * kActivationBound) << shift;
}

}  // namespace

WeightMatrix &NetworkWeights::matrix(MatrixId id) {
  return const_cast<WeightMatrix &>(static_cast<const NetworkWeights &>(*this).matrix(id));
}

const WeightMatrix &NetworkWeights::matrix(MatrixId id) const {
  switch (id) {
    case MatrixId::W_xr: return W_xr;
    case MatrixId::W_xu: return W_xu;
    case MatrixId::W_xc: return W_xc;
    case MatrixId::W_hr: return W_hr;
    case MatrixId::W_hu: return W_hu;
    case MatrixId::W_hc: return W_hc;
    case MatrixId::W_fc: return W_fc;
  }
  throw std::invalid_argument("unknown matrix id");
}

std::vector<std::int32_t> &NetworkWeights::bias(BiasId id) {
  return const_cast<std::vector<std::int32_t> &>(static_cast<const NetworkWeights &>(*this).bias(id));
}

const std::vector<std::int32_t> &NetworkWeights::bias(BiasId id) const {
  switch (id) {
    case BiasId::b_r: return b_r;
    case BiasId::b_u: return b_u;
    case BiasId::b_c: return b_c;
    case BiasId::b_fc: return b_fc;
  }
  throw std::invalid_argument("unknown bias id");
}

void validate_weights(const NetworkWeights &w) {
  const auto &d = w.dims;
  require(d.n_in >= 1 && d.n_in <= kMaxInputs, fmt::format("n_in {} outside 1..{}", d.n_in, kMaxInputs));
  require(d.n_hid >= 1 && d.n_hid <= kMaxHidden, fmt::format("n_hid {} outside 1..{}", d.n_hid, kMaxHidden));
  require(d.n_out >= 1 && d.n_out <= kMaxOutputs, fmt::format("n_out {} outside 1..{}", d.n_out, kMaxOutputs));
  check_matrix(w.W_xr, d.n_hid, d.n_in, "W_xr");
  check_matrix(w.W_xu, d.n_hid, d.n_in, "W_xu");
  check_matrix(w.W_xc, d.n_hid, d.n_in, "W_xc");
  check_matrix(w.W_hr, d.n_hid, d.n_hid, "W_hr");
  check_matrix(w.W_hu, d.n_hid, d.n_hid, "W_hu");
  check_matrix(w.W_hc, d.n_hid, d.n_hid, "W_hc");
  check_matrix(w.W_fc, d.n_out, d.n_hid, "W_fc");
  require(w.b_r.size() == static_cast<std::size_t>(d.n_hid), "b_r length mismatch");
  require(w.b_u.size() == static_cast<std::size_t>(d.n_hid), "b_u length mismatch");
  require(w.b_c.size() == static_cast<std::size_t>(d.n_hid), "b_c length mismatch");
  require(w.b_fc.size() == static_cast<std::size_t>(d.n_out), "b_fc length mismatch");

  constexpr std::int64_t kLimit = std::int64_t{1} << 31;
  const Scales s = scales_of(w);
  for (int i = 0; i < d.n_hid; ++i) {
    const auto check = [&](std::int64_t total, const char *acc) {
      require(total < kLimit, fmt::format("{} row {} can overflow the 32-bit accumulator", acc, i));
    };
    check(row_headroom(w.W_xr, i, s.r.shift_x) + row_headroom(w.W_hr, i, s.r.shift_h) + std::abs(std::int64_t{w.b_r[i]}),
          "M_r");
    check(row_headroom(w.W_xu, i, s.u.shift_x) + row_headroom(w.W_hu, i, s.u.shift_h) + std::abs(std::int64_t{w.b_u[i]}),
          "M_u");
    check(row_headroom(w.W_xc, i, s.c.shift_x) + std::abs(std::int64_t{w.b_c[i]}), "M_xc");
    check(row_headroom(w.W_hc, i, s.c.shift_h), "M_hc");
  }
  for (int o = 0; o < d.n_out; ++o) {
    require(row_headroom(w.W_fc, o, 0) + std::abs(std::int64_t{w.b_fc[o]}) < kLimit,
            fmt::format("logit row {} can overflow the 32-bit accumulator", o));
  }
}

NetworkWeights random_weights(const Dims &dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto uniform = [&](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const auto fill = [&](int rows, int cols, int exp_lo, int exp_hi) {
    WeightMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.scale_exp = static_cast<int>(uniform(exp_lo, exp_hi));
    m.data.resize(static_cast<std::size_t>(rows) * cols);
    for (auto &v : m.data) v = static_cast<std::int8_t>(uniform(-127, 127));
    return m;
  };
  NetworkWeights w;
  w.dims = dims;
  // Typical weight magnitude ~ 127 * 2^-9 = 0.25 keeps gates off the rails.
  w.W_xr = fill(dims.n_hid, dims.n_in, -10, -8);
  w.W_xu = fill(dims.n_hid, dims.n_in, -10, -8);
  w.W_xc = fill(dims.n_hid, dims.n_in, -10, -8);
  w.W_hr = fill(dims.n_hid, dims.n_hid, -10, -8);
  w.W_hu = fill(dims.n_hid, dims.n_hid, -10, -8);
  w.W_hc = fill(dims.n_hid, dims.n_hid, -10, -8);
  w.W_fc = fill(dims.n_out, dims.n_hid, -9, -7);
  const Scales s = scales_of(w);
  // Biases up to +/-0.5 in real units.
  const auto biases = [&](int n, int e_min) {
    const std::int64_t half = std::int64_t{1} << (kActFrac - e_min - 1);
    std::vector<std::int32_t> b(n);
    for (auto &v : b) v = static_cast<std::int32_t>(uniform(-half, half));
    return b;
  };
  w.b_r = biases(dims.n_hid, s.r.e_min);
  w.b_u = biases(dims.n_hid, s.u.e_min);
  w.b_c = biases(dims.n_hid, s.c.e_min);
  w.b_fc = biases(dims.n_out, w.W_fc.scale_exp);
  validate_weights(w);
  return w;
}

const Nonlinearity &tables() {
  static const Nonlinearity t = [] {
    Nonlinearity n;
    const double one = static_cast<double>(kOne);
    const auto sig = [&](int k) { return std::lround(one / (1.0 + std::exp(-k / 16.0))); };
    const auto th = [&](int k) { return std::lround(one * std::tanh(k / 16.0)); };
    const int mid = kTableSize / 2;
    for (int k = 0; k < mid; ++k) {
      n.sigmoid[mid + k] = static_cast<std::int32_t>(sig(k));
      n.tanh[mid + k] = static_cast<std::int32_t>(th(k));
    }
    // Negative half mirrored so the symmetries hold exactly on the grid.
    for (int k = 1; k < mid; ++k) {
      n.sigmoid[mid - k] = static_cast<std::int32_t>(kOne) - n.sigmoid[mid + k];
      n.tanh[mid - k] = -n.tanh[mid + k];
    }
    n.sigmoid[0] = static_cast<std::int32_t>(sig(-mid));
    n.tanh[0] = static_cast<std::int32_t>(th(-mid));
    return n;
  }();
  return t;
}

int table_index(std::int64_t m, int e_min) {
  // m * 2^(e_min - 14) real units, times 2^4 grid steps per unit.
  const int shift = kActFrac - kTableGridBits - e_min;
  std::int64_t k = 0;
  if (shift >= 0) {
    k = rne_shift(m, shift);
  } else {
    const int left = -shift;
    k = left >= 40 || std::abs(m) >= (std::int64_t{1} << (62 - left)) ? (m < 0 ? -kTableSize : kTableSize)
                                                                      : m * (std::int64_t{1} << left);
  }
  return static_cast<int>(std::clamp<std::int64_t>(k, -kTableSize / 2, kTableSize / 2 - 1));
}

std::int32_t sigmoid_q(std::int64_t m, int e_min) { return tables().sigmoid[table_index(m, e_min) + kTableSize / 2]; }

std::int32_t tanh_q(std::int64_t m, int e_min) { return tables().tanh[table_index(m, e_min) + kTableSize / 2]; }

std::int32_t quantize_theta(double theta) {
  if (std::isnan(theta) || theta < 0.0) throw std::invalid_argument("theta must be a non-negative number");
  const double scaled = std::ldexp(theta, kActFrac);
  if (scaled >= static_cast<double>(INT32_MAX)) return INT32_MAX;
  return quantize(theta, QFormat{32, kActFrac}).raw;
}

DeltaResult delta_encode(std::span<const std::int32_t> v, std::vector<std::int32_t> &v_hat, std::int32_t theta_raw) {
  if (v.size() != v_hat.size()) throw std::invalid_argument("delta_encode: length mismatch");
  DeltaResult r;
  r.delta.assign(v.size(), 0);
  r.fired.assign(v.size(), false);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::int64_t d = std::int64_t{v[i]} - v_hat[i];
    if (std::abs(d) > theta_raw) {
      r.delta[i] = static_cast<std::int32_t>(d);
      r.fired[i] = true;
      v_hat[i] = v[i];
      ++r.n_fired;
    }
  }
  return r;
}

DeltaState DeltaState::initial(const NetworkWeights &w) {
  DeltaState s;
  s.x_hat.assign(w.dims.n_in, 0);
  s.h_hat.assign(w.dims.n_hid, 0);
  s.h_prev.assign(w.dims.n_hid, 0);
  s.M_r = w.b_r;
  s.M_u = w.b_u;
  s.M_xc = w.b_c;
  s.M_hc.assign(w.dims.n_hid, 0);
  return s;
}

std::vector<std::int32_t> delta_gru_step(DeltaState &state, std::span<const std::int32_t> x, std::int32_t theta_raw,
                                         const NetworkWeights &w, FrameStats *stats) {
  if (x.size() != static_cast<std::size_t>(w.dims.n_in)) throw std::invalid_argument("delta_gru_step: input width");
  const Scales s = scales_of(w);
  const DeltaResult dx = delta_encode(x, state.x_hat, theta_raw);
  const DeltaResult dh = delta_encode(state.h_prev, state.h_hat, theta_raw);

  auto m_r = widen(state.M_r);
  auto m_u = widen(state.M_u);
  auto m_xc = widen(state.M_xc);
  auto m_hc = widen(state.M_hc);
  // Only the columns of fired elements are read and multiplied.
  for (int j = 0; j < w.dims.n_in; ++j) {
    if (!dx.fired[j]) continue;
    add_column(m_r, w.W_xr, j, dx.delta[j], s.r.shift_x);
    add_column(m_u, w.W_xu, j, dx.delta[j], s.u.shift_x);
    add_column(m_xc, w.W_xc, j, dx.delta[j], s.c.shift_x);
  }
  for (int j = 0; j < w.dims.n_hid; ++j) {
    if (!dh.fired[j]) continue;
    add_column(m_r, w.W_hr, j, dh.delta[j], s.r.shift_h);
    add_column(m_u, w.W_hu, j, dh.delta[j], s.u.shift_h);
    add_column(m_hc, w.W_hc, j, dh.delta[j], s.c.shift_h);
  }
  narrow_into(m_r, state.M_r);
  narrow_into(m_u, state.M_u);
  narrow_into(m_xc, state.M_xc);
  narrow_into(m_hc, state.M_hc);

  auto h_next = finish_step(s, state.M_r, state.M_u, state.M_xc, state.M_hc, state.h_prev);
  state.h_prev = h_next;
  if (stats != nullptr) {
    stats->fired_x = dx.n_fired;
    stats->fired_h = dh.n_fired;
    stats->macs = std::int64_t{3} * w.dims.n_hid * (dx.n_fired + dh.n_fired) + std::int64_t{w.dims.n_hid} * w.dims.n_out;
    stats->weights_touched = stats->macs;
  }
  return h_next;
}

std::vector<std::int32_t> gru_step_dense(std::span<const std::int32_t> x, std::span<const std::int32_t> h,
                                         const NetworkWeights &w) {
  if (x.size() != static_cast<std::size_t>(w.dims.n_in) || h.size() != static_cast<std::size_t>(w.dims.n_hid)) {
    throw std::invalid_argument("gru_step_dense: input width");
  }
  const Scales s = scales_of(w);
  auto m_r = widen(w.b_r);
  auto m_u = widen(w.b_u);
  auto m_xc = widen(w.b_c);
  std::vector<std::int64_t> m_hc(w.dims.n_hid, 0);
  for (int j = 0; j < w.dims.n_in; ++j) {
    add_column(m_r, w.W_xr, j, x[j], s.r.shift_x);
    add_column(m_u, w.W_xu, j, x[j], s.u.shift_x);
    add_column(m_xc, w.W_xc, j, x[j], s.c.shift_x);
  }
  for (int j = 0; j < w.dims.n_hid; ++j) {
    add_column(m_r, w.W_hr, j, h[j], s.r.shift_h);
    add_column(m_u, w.W_hu, j, h[j], s.u.shift_h);
    add_column(m_hc, w.W_hc, j, h[j], s.c.shift_h);
  }
  std::vector<std::int32_t> r(w.dims.n_hid), u(w.dims.n_hid), xc(w.dims.n_hid), hc(w.dims.n_hid);
  narrow_into(m_r, r);
  narrow_into(m_u, u);
  narrow_into(m_xc, xc);
  narrow_into(m_hc, hc);
  return finish_step(s, r, u, xc, hc, h);
}

std::vector<std::int32_t> fc_forward(std::span<const std::int32_t> h, const NetworkWeights &w) {
  if (h.size() != static_cast<std::size_t>(w.dims.n_hid)) throw std::invalid_argument("fc_forward: hidden width");
  auto acc = widen(w.b_fc);
  for (int j = 0; j < w.dims.n_hid; ++j) add_column(acc, w.W_fc, j, h[j], 0);
  std::vector<std::int32_t> logits(w.dims.n_out);
  narrow_into(acc, logits);
  return logits;
}

double UtteranceStats::temporal_sparsity() const {
  if (frames == 0) return 0.0;
  return 1.0 - static_cast<double>(fired_x + fired_h) / (static_cast<double>(n_in + n_hid) * frames);
}

double UtteranceStats::input_sparsity() const {
  if (frames == 0) return 0.0;
  return 1.0 - static_cast<double>(fired_x) / (static_cast<double>(n_in) * frames);
}

double UtteranceStats::hidden_sparsity() const {
  if (frames == 0) return 0.0;
  return 1.0 - static_cast<double>(fired_h) / (static_cast<double>(n_hid) * frames);
}

int argmax_excluding(std::span<const std::int64_t> logits, int excluded) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(logits.size()); ++i) {
    if (i == excluded) continue;
    if (best < 0 || logits[i] > logits[best]) best = i;
  }
  if (best < 0) throw std::invalid_argument("argmax over no classes");
  return best;
}

InferenceResult run_inference(std::span<const std::vector<std::int32_t>> features, double theta,
                              const NetworkWeights &w, const InferenceOptions &options) {
  if (features.empty()) throw Error(ErrorCategory::validation, "inference needs at least one frame");
  const std::int32_t theta_raw = quantize_theta(theta);
  InferenceResult result;
  result.logit_sum.assign(w.dims.n_out, 0);
  auto &st = result.stats;
  st.n_in = w.dims.n_in;
  st.n_hid = w.dims.n_hid;

  DeltaState state = DeltaState::initial(w);
  std::vector<std::int32_t> x(w.dims.n_in);
  for (const auto &frame : features) {
    if (frame.size() != static_cast<std::size_t>(w.dims.n_in)) {
      throw Error(ErrorCategory::validation,
                  fmt::format("feature frame has {} values, network expects {}", frame.size(), w.dims.n_in));
    }
    for (int j = 0; j < w.dims.n_in; ++j) {
      if (frame[j] < 0 || frame[j] > kFeatureMax) {
        throw Error(ErrorCategory::validation, fmt::format("feature value {} outside 0..4095", frame[j]));
      }
      x[j] = frame[j] << kFeatureToActivationShift;
    }
    FrameStats fs;
    if (options.dense) {
      state.h_prev = gru_step_dense(x, state.h_prev, w);
      fs.fired_x = w.dims.n_in;
      fs.fired_h = w.dims.n_hid;
      fs.macs = std::int64_t{3} * w.dims.n_hid * (w.dims.n_in + w.dims.n_hid) + std::int64_t{w.dims.n_hid} * w.dims.n_out;
      fs.weights_touched = fs.macs;
    } else {
      delta_gru_step(state, x, theta_raw, w, &fs);
    }
    const auto logits = fc_forward(state.h_prev, w);
    for (int o = 0; o < w.dims.n_out; ++o) result.logit_sum[o] += logits[o];
    if (options.keep_trace) {
      result.logits_trace.push_back(logits);
      result.hidden_trace.push_back(state.h_prev);
    }
    ++st.frames;
    st.fired_x += fs.fired_x;
    st.fired_h += fs.fired_h;
    st.macs += fs.macs;
    st.weights_touched += fs.weights_touched;
    st.per_frame.push_back(fs);
  }
  result.decision = argmax_excluding(result.logit_sum, -1);
  return result;
}

}  // namespace dkws::gru
