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

#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "dkws/accel_model.hpp"
#include "dkws/error.hpp"

using namespace dkws;
using namespace dkws::accel;

namespace {

ErrorCategory category_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.category();
  }
  FAIL("expected dkws::Error");
  return ErrorCategory::usage;
}

gru::FrameStats frame_with_macs(std::int64_t macs) {
  gru::FrameStats f;
  f.macs = macs;
  f.weights_touched = macs;
  return f;
}

gru::UtteranceStats dense_utterance(int frames) {
  gru::UtteranceStats s;
  s.frames = frames;
  s.n_in = 10;
  s.n_hid = 64;
  for (int t = 0; t < frames; ++t) {
    auto f = frame_with_macs(14976);
    f.fired_x = 10;
    f.fired_h = 64;
    s.per_frame.push_back(f);
    s.fired_x += 10;
    s.fired_h += 64;
    s.macs += f.macs;
    s.weights_touched += f.weights_touched;
  }
  return s;
}

}  // namespace

TEST_CASE("cycle and read counts") {
  CostModel cm;
  CHECK(frame_cycles(frame_with_macs(14976), cm) == 1872);
  CHECK(frame_cycles(frame_with_macs(14977), cm) == 1873);
  CHECK(frame_cycles(frame_with_macs(0), cm) == 0);
  cm.cycles_frame_fixed = 178;
  CHECK(frame_cycles(frame_with_macs(14976), cm) == 2050);
  CHECK(weight_reads(frame_with_macs(14976)) == 7488);
  CHECK(weight_reads(frame_with_macs(768)) == 384);
  CHECK(weight_reads(frame_with_macs(769)) == 385);
  CHECK(expected_macs(gru::Dims{}, 0.0) == 14976.0);
  CHECK(expected_macs(gru::Dims{}, 1.0) == 768.0);
}

TEST_CASE("an all-zero energy model reports zero energy and pure MAC latency") {
  const CostModel cm;  // energies zero, no fixed cycles
  const auto r = evaluate(dense_utterance(62), cm);
  CHECK(r.energy_nj == 0.0);
  CHECK(r.cycles == 62 * 1872);
  CHECK(r.latency_ms == doctest::Approx(1872.0 / 125.0));
  CHECK(r.weight_reads == 62 * 7488);
}

TEST_CASE("energy breakdown sums and FEx channel scaling") {
  CostModel cm;
  cm.e_mac_nj = 1e-4;
  cm.e_read_nj = 2e-4;
  cm.e_frame_fixed_nj = 0.3;
  cm.e_fex_frame_nj = 0.1;
  const auto s = dense_utterance(10);
  const auto r = evaluate(s, cm);
  CHECK(r.energy.mac_nj == doctest::Approx(10 * 14976 * 1e-4));
  CHECK(r.energy.read_nj == doctest::Approx(10 * 7488 * 2e-4));
  CHECK(r.energy.fixed_nj == doctest::Approx(3.0));
  CHECK(r.energy.fex_nj == doctest::Approx(1.0));
  CHECK(r.energy_nj == doctest::Approx(r.energy.total()));
  CHECK(decision_energy(s, cm) == doctest::Approx(r.energy_nj));
  CHECK(evaluate(s, cm, 5).energy.fex_nj == doctest::Approx(0.5));
  CHECK(evaluate(s, cm, 16).energy.fex_nj == doctest::Approx(1.6));
}

TEST_CASE("calibration reproduces the dense point exactly and the sparse energy") {
  const auto dense = paper_dense_point();
  const auto sparse = paper_sparse_point();
  CHECK(dense.latency_ms == 16.4);
  CHECK(sparse.sparsity == 0.87);
  const auto cal = calibrate(dense, sparse, CostModel{});
  // Independent two-point solve of energy = 62 * (bundle * MACs + constant).
  const double m_dense = 3.0 * 64 * 74 + 768;
  const double m_sparse = 3.0 * 64 * 74 * (1 - 0.87) + 768;
  const double bundle = (dense.energy_nj - sparse.energy_nj) / (62 * (m_dense - m_sparse));
  const double constant = dense.energy_nj / 62 - bundle * m_dense;
  CHECK(cal.dense_macs == doctest::Approx(m_dense));
  CHECK(cal.sparse_macs == doctest::Approx(m_sparse));
  CHECK(cal.bundle_nj_per_mac == doctest::Approx(bundle).epsilon(1e-12));
  CHECK(cal.frame_constant_nj == doctest::Approx(constant).epsilon(1e-12));
  CHECK(cal.model.e_mac_nj + cal.model.e_read_nj / 2 == doctest::Approx(bundle).epsilon(1e-12));
  CHECK(cal.model.cycles_frame_fixed == 178);  // 16.4 ms * 125 kHz = 2050 = 1872 + 178
  CHECK(std::abs(cal.dense_latency_residual) < 1e-12);
  CHECK(std::abs(cal.dense_energy_residual) < 1e-9);
  CHECK(std::abs(cal.sparse_energy_residual) < 1e-9);
  // One cycle parameter cannot also hit 6.9 ms: the sparse latency is a residual.
  CHECK(cal.sparse_latency_residual < -0.4);

  // The calibrated model evaluated on an actual dense utterance hits the point.
  const auto r = evaluate(dense_utterance(62), cal.model);
  CHECK(r.latency_ms == doctest::Approx(16.4).epsilon(1e-12));
  CHECK(r.energy_nj == doctest::Approx(121.2).epsilon(1e-9));
}

TEST_CASE("calibration failures are numeric errors") {
  const auto dense = paper_dense_point();
  auto same = dense;
  CHECK(category_of([&] { calibrate(dense, same, CostModel{}); }) == ErrorCategory::numeric);
  auto inverted = paper_sparse_point();
  inverted.energy_nj = 500.0;  // sparser but more expensive: negative per-MAC energy
  CHECK(category_of([&] { calibrate(dense, inverted, CostModel{}); }) == ErrorCategory::numeric);
}

TEST_CASE("prediction is monotone in sparsity") {
  const auto cal = calibrate(paper_dense_point(), paper_sparse_point(), CostModel{});
  OperatingPoint prev = predict(cal.model, gru::Dims{}, 0.0, 62);
  for (int i = 1; i <= 20; ++i) {
    const auto p = predict(cal.model, gru::Dims{}, i / 20.0, 62);
    CHECK(p.latency_ms <= prev.latency_ms);
    CHECK(p.energy_nj < prev.energy_nj);
    prev = p;
  }
}

TEST_CASE("cost model file round trip and validation") {
  const auto cal = calibrate(paper_dense_point(), paper_sparse_point(), CostModel{});
  std::ostringstream out;
  write_cost_model(out, cal.model, &cal);
  std::istringstream in(out.str());
  CHECK(read_cost_model(in) == cal.model);

  auto bad = cal.model;
  bad.e_mac_nj = -1;
  CHECK(category_of([&] { validate(bad); }) == ErrorCategory::validation);
  bad = cal.model;
  bad.macs_parallel = 0;
  CHECK(category_of([&] { validate(bad); }) == ErrorCategory::validation);
  std::istringstream junk("format = something\n");
  CHECK(category_of([&] { read_cost_model(junk); }) == ErrorCategory::format);
  CHECK(category_of([] { load_cost_model("/nonexistent/cost.txt"); }) == ErrorCategory::io);
}
