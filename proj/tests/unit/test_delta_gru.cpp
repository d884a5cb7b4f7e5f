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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "doctest.h"
#include "dkws/delta_gru.hpp"
#include "dkws/error.hpp"
#include "dkws/formats.hpp"
#include "support/oracles.hpp"

using namespace dkws;
using namespace dkws::gru;

namespace {

std::vector<std::int32_t> random_activations(std::mt19937_64 &rng, int n, int lo = -kActivationOne,
                                             int hi = kActivationOne) {
  std::uniform_int_distribution<int> dist(lo, hi);
  std::vector<std::int32_t> v(n);
  for (auto &x : v) x = dist(rng);
  return v;
}

// Slowly varying input so that thresholds actually skip elements.
std::vector<std::vector<std::int32_t>> random_walk(std::mt19937_64 &rng, int frames, int n) {
  std::vector<std::vector<std::int32_t>> xs;
  auto x = random_activations(rng, n, 0, kActivationOne);
  std::uniform_int_distribution<int> step(-1500, 1500);
  for (int t = 0; t < frames; ++t) {
    for (auto &v : x) v = std::clamp(v + step(rng), 0, kActivationOne - 1);
    xs.push_back(x);
  }
  return xs;
}

ErrorCategory category_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.category();
  }
  FAIL("expected dkws::Error");
  return ErrorCategory::usage;
}

}  // namespace

TEST_CASE("nonlinearity tables: anchors, symmetry and monotonicity") {
  const auto &t = tables();
  const int mid = kTableSize / 2;
  CHECK(t.sigmoid[mid] == kActivationOne / 2);
  CHECK(t.tanh[mid] == 0);
  for (int k = 1; k < mid; ++k) {
    CHECK(t.sigmoid[mid + k] + t.sigmoid[mid - k] == kActivationOne);
    CHECK(t.tanh[mid + k] == -t.tanh[mid - k]);
  }
  for (int i = 1; i < kTableSize; ++i) {
    CHECK(t.sigmoid[i] >= t.sigmoid[i - 1]);
    CHECK(t.tanh[i] >= t.tanh[i - 1]);
  }
  for (int i = 0; i < kTableSize; ++i) {
    const double x = (i - mid) / 16.0;
    CHECK(std::abs(t.sigmoid[i] - kActivationOne / (1 + std::exp(-x))) <= 0.5);
    CHECK(std::abs(t.tanh[i] - kActivationOne * std::tanh(x)) <= 0.5);
  }
}

TEST_CASE("table_index: scaling, rounding and clamping") {
  // e_min = -7: one accumulator unit is 2^-21, so 2^21 is 1.0 -> index 16.
  CHECK(table_index(std::int64_t{1} << 21, -7) == 16);
  CHECK(table_index(-(std::int64_t{1} << 21), -7) == -16);
  CHECK(table_index(0, -7) == 0);
  CHECK(table_index(std::int64_t{1} << 40, -7) == 127);
  CHECK(table_index(-(std::int64_t{1} << 40), -7) == -128);
  // Half a grid step (2^16 units) rounds to even.
  CHECK(table_index(std::int64_t{1} << 16, -7) == 0);
  CHECK(table_index(3 * (std::int64_t{1} << 16), -7) == 2);
  // Positive e_min: units larger than the grid step.
  CHECK(table_index(1, 12) == 4);  // one unit is 0.25
  CHECK(table_index(100, 12) == 127);
  CHECK(table_index(1, -10) == 0);
  CHECK(sigmoid_q(0, -7) == kActivationOne / 2);
  CHECK(tanh_q(std::int64_t{1} << 40, -7) == tables().tanh[kTableSize - 1]);
}

TEST_CASE("quantize_theta") {
  CHECK(quantize_theta(0.0) == 0);
  CHECK(quantize_theta(0.2) == 3277);  // 3276.8 rounds up
  CHECK(quantize_theta(0.5) == 8192);
  CHECK(quantize_theta(std::numeric_limits<double>::infinity()) == std::numeric_limits<std::int32_t>::max());
  CHECK(quantize_theta(1e12) == std::numeric_limits<std::int32_t>::max());
  CHECK_THROWS_AS(quantize_theta(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(quantize_theta(std::nan("")), std::invalid_argument);
}

TEST_CASE("delta_encode fires strictly above the threshold") {
  std::vector<std::int32_t> hat{0, 0, 0};
  auto r = delta_encode(std::vector<std::int32_t>{100, -101, 50}, hat, 100);
  CHECK(r.n_fired == 1);
  CHECK(r.fired == std::vector<bool>{false, true, false});
  CHECK(r.delta == std::vector<std::int32_t>{0, -101, 0});
  CHECK(hat == std::vector<std::int32_t>{0, -101, 0});
}

TEST_CASE("delta firing count is not monotone in theta for a single sequence") {
  // x = 3g, 5g, g with g = 819 (0.05 on the activation grid): theta = 2g fires
  // once, theta = 3g fires twice. Larger thresholds do not always fire less.
  const std::int32_t g = 819;
  const auto count = [&](std::int32_t theta) {
    std::vector<std::int32_t> hat{0};
    int fired = 0;
    for (std::int32_t x : {3 * g, 5 * g, g}) fired += delta_encode(std::vector<std::int32_t>{x}, hat, theta).n_fired;
    return fired;
  };
  CHECK(count(2 * g) == 1);
  CHECK(count(3 * g) == 2);
  CHECK(count(0) == 3);
  CHECK(count(6 * g) == 0);
}

TEST_CASE("theta = 0 delta steps equal the independent dense oracle bit for bit") {
  std::mt19937_64 rng(21);
  for (int s = 0; s < 20; ++s) {
    const Dims dims{1 + s % 16, 8 + 7 * s, 1 + s % 12};
    const auto w = random_weights(dims, 100 + s);
    auto state = DeltaState::initial(w);
    std::vector<std::int32_t> h(dims.n_hid, 0);
    for (int t = 0; t < 15; ++t) {
      const auto x = random_activations(rng, dims.n_in);
      const auto h_delta = delta_gru_step(state, x, 0, w);
      const auto h_ref = oracle::gru_step(x, h, w);
      REQUIRE(h_delta == h_ref);
      CHECK(gru_step_dense(x, h, w) == h_ref);
      CHECK(fc_forward(h_delta, w) == oracle::fc(h_ref, w));
      h = h_ref;
    }
  }
}

TEST_CASE("dense integer GRU stays close to the real-valued GRU") {
  std::mt19937_64 rng(5);
  const auto w = random_weights(Dims{}, 77);
  std::vector<std::int32_t> h(w.dims.n_hid, 0);
  std::vector<double> h_real(w.dims.n_hid, 0.0);
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const auto x = random_activations(rng, w.dims.n_in, 0, kActivationOne);
    std::vector<double> xr;
    for (auto v : x) xr.push_back(static_cast<double>(v) / kActivationOne);
    h = gru_step_dense(x, h, w);
    h_real = oracle::gru_step_real(xr, h_real, w);
    for (int i = 0; i < w.dims.n_hid; ++i) worst = std::max(worst, std::abs(static_cast<double>(h[i]) / kActivationOne - h_real[i]));
  }
  INFO("worst hidden error " << worst);
  // Gate tables on a 1/16 grid: a single step is off by at most ~0.03; errors
  // stay bounded because the update is a convex combination.
  CHECK(worst < 0.1);
}

TEST_CASE("frame statistics: MAC formula and infinite threshold") {
  std::mt19937_64 rng(8);
  const auto w = random_weights(Dims{}, 3);
  const auto xs = random_walk(rng, 40, w.dims.n_in);
  for (double theta : {0.0, 0.05, 0.2}) {
    auto state = DeltaState::initial(w);
    for (const auto &x : xs) {
      FrameStats st;
      delta_gru_step(state, x, quantize_theta(theta), w, &st);
      CHECK(st.macs == 3LL * w.dims.n_hid * (st.fired_x + st.fired_h) + w.dims.n_hid * w.dims.n_out);
      CHECK(st.weights_touched == st.macs);
    }
  }
  std::vector<std::vector<std::int32_t>> feats(10, std::vector<std::int32_t>(10, 4000));
  const auto r = run_inference(feats, std::numeric_limits<double>::infinity(), w);
  CHECK(r.stats.fired_x == 0);
  CHECK(r.stats.fired_h == 0);
  CHECK(r.stats.macs == 10 * 768);
  CHECK(r.stats.temporal_sparsity() == 1.0);
}

TEST_CASE("reconstruction error never exceeds theta") {
  std::mt19937_64 rng(13);
  const auto w = random_weights(Dims{}, 9);
  const auto xs = random_walk(rng, 60, w.dims.n_in);
  for (double theta : {0.01, 0.1, 0.3}) {
    const auto th = quantize_theta(theta);
    auto state = DeltaState::initial(w);
    for (const auto &x : xs) {
      // Each step delta-encodes x_t and the previous hidden state h_{t-1}.
      const auto h_before = state.h_prev;
      delta_gru_step(state, x, th, w);
      for (int i = 0; i < w.dims.n_in; ++i) CHECK(std::abs(state.x_hat[i] - x[i]) <= th);
      for (int i = 0; i < w.dims.n_hid; ++i) CHECK(std::abs(state.h_hat[i] - h_before[i]) <= th);
    }
  }
}

TEST_CASE("run_inference: theta 0 matches the dense option; errors") {
  std::mt19937_64 rng(4);
  const auto w = random_weights(Dims{}, 12);
  std::vector<std::vector<std::int32_t>> feats;
  std::uniform_int_distribution<int> f(0, kFeatureMax);
  for (int t = 0; t < 62; ++t) {
    std::vector<std::int32_t> row(10);
    for (auto &v : row) v = f(rng);
    feats.push_back(row);
  }
  InferenceOptions dense_opt;
  dense_opt.dense = true;
  dense_opt.keep_trace = true;
  InferenceOptions delta_opt;
  delta_opt.keep_trace = true;
  const auto a = run_inference(feats, 0.0, w, delta_opt);
  const auto b = run_inference(feats, 0.0, w, dense_opt);
  CHECK(a.decision == b.decision);
  CHECK(a.logit_sum == b.logit_sum);
  CHECK(a.hidden_trace == b.hidden_trace);
  CHECK(a.stats.frames == 62);
  CHECK(a.stats.macs == 3LL * 64 * (a.stats.fired_x + a.stats.fired_h) + 62LL * 768);
  CHECK(a.stats.fired_x + a.stats.fired_h <= 62LL * 74);

  CHECK(category_of([&] { run_inference({}, 0.0, w); }) == ErrorCategory::validation);
  std::vector<std::vector<std::int32_t>> narrow{{1, 2, 3}};
  CHECK(category_of([&] { run_inference(narrow, 0.0, w); }) == ErrorCategory::validation);
}

TEST_CASE("argmax: lowest index wins ties, exclusion skips one class") {
  const std::vector<std::int64_t> l{5, 9, 9, 1};
  CHECK(argmax_excluding(l, -1) == 1);
  CHECK(argmax_excluding(l, 1) == 2);
  CHECK(argmax_excluding(std::vector<std::int64_t>{-3, -3}, -1) == 0);
}

TEST_CASE("validate_weights rejects bad shapes, exponents and headroom") {
  const auto good = random_weights(Dims{}, 1);
  CHECK_NOTHROW(validate_weights(good));
  auto w = good;
  w.W_xr.rows = 63;
  CHECK(category_of([&] { validate_weights(w); }) == ErrorCategory::validation);
  w = good;
  w.W_hc.data.pop_back();
  CHECK(category_of([&] { validate_weights(w); }) == ErrorCategory::validation);
  w = good;
  w.b_fc.push_back(0);
  CHECK(category_of([&] { validate_weights(w); }) == ErrorCategory::validation);
  w = good;
  w.W_fc.scale_exp = 9;
  CHECK(category_of([&] { validate_weights(w); }) == ErrorCategory::validation);
  w = good;
  w.dims.n_in = 17;
  CHECK(category_of([&] { validate_weights(w); }) == ErrorCategory::validation);
  // A 2^18 exponent gap between the input and recurrent matrices overflows.
  w = good;
  w.W_xr.scale_exp = -24;
  w.W_hr.scale_exp = 8;
  CHECK(category_of([&] { validate_weights(w); }) == ErrorCategory::validation);
  w = good;
  w.b_c[0] = std::numeric_limits<std::int32_t>::max();
  CHECK(category_of([&] { validate_weights(w); }) == ErrorCategory::validation);
}

TEST_CASE("random_weights is deterministic per seed") {
  CHECK(random_weights(Dims{}, 42) == random_weights(Dims{}, 42));
  CHECK_FALSE(random_weights(Dims{}, 42) == random_weights(Dims{}, 43));
  const auto w = random_weights(Dims{16, 32, 5}, 0);
  CHECK(w.W_xr.cols == 16);
  CHECK(w.W_fc.rows == 5);
}
