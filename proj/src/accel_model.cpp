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

#include "dkws/accel_model.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dkws/error.hpp"
#include "dkws/key_value.hpp"

namespace dkws::accel {

namespace {

constexpr const char *kMagic = "dkws-cost-model";
constexpr int kVersion = 1;
constexpr int kWeightsPerRead = 2;

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

double fex_energy(const CostModel &cm, int fex_channels) {
  if (fex_channels < 0) return cm.e_fex_frame_nj;
  return cm.e_fex_frame_nj * fex_channels / cm.fex_reference_channels;
}

double relative(double predicted, double target) { return (predicted - target) / target; }

}  // namespace

void validate(const CostModel &cm) {
  const auto fail = [](const std::string &what) { throw Error(ErrorCategory::validation, "cost model: " + what); };
  if (cm.macs_parallel < 1) fail("macs_parallel must be >= 1");
  if (cm.clock_hz < 1) fail("clock_hz must be >= 1");
  if (cm.fex_reference_channels < 1) fail("fex_reference_channels must be >= 1");
  if (cm.cycles_frame_fixed < 0) fail("cycles_frame_fixed must be >= 0");
  for (double v : {cm.e_mac_nj, cm.e_read_nj, cm.e_frame_fixed_nj, cm.e_fex_frame_nj}) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail("energies must be finite and >= 0");
  }
}

std::int64_t frame_cycles(const gru::FrameStats &frame, const CostModel &cm) {
  return ceil_div(frame.macs, cm.macs_parallel) + cm.cycles_frame_fixed;
}

std::int64_t weight_reads(const gru::FrameStats &frame) { return ceil_div(frame.weights_touched, kWeightsPerRead); }

CostReport evaluate(const gru::UtteranceStats &stats, const CostModel &cm, int fex_channels) {
  validate(cm);
  CostReport r;
  r.frames = stats.frames;
  const double fex = fex_energy(cm, fex_channels);
  for (const auto &f : stats.per_frame) {
    const std::int64_t reads = weight_reads(f);
    r.macs += f.macs;
    r.weight_reads += reads;
    r.cycles += frame_cycles(f, cm);
    r.energy.mac_nj += static_cast<double>(f.macs) * cm.e_mac_nj;
    r.energy.read_nj += static_cast<double>(reads) * cm.e_read_nj;
    r.energy.fixed_nj += cm.e_frame_fixed_nj;
    r.energy.fex_nj += fex;
  }
  r.energy_nj = r.energy.total();
  if (r.frames > 0) r.latency_ms = 1000.0 * static_cast<double>(r.cycles) / r.frames / cm.clock_hz;
  return r;
}

double decision_energy(const gru::UtteranceStats &stats, const CostModel &cm, int fex_channels) {
  return evaluate(stats, cm, fex_channels).energy_nj;
}

OperatingPoint paper_dense_point() { return OperatingPoint{16.4, 121.2, 0.0}; }

OperatingPoint paper_sparse_point() { return OperatingPoint{6.9, 36.11, 0.87}; }

double expected_macs(const gru::Dims &dims, double sparsity) {
  return 3.0 * dims.n_hid * (dims.n_in + dims.n_hid) * (1.0 - sparsity) + static_cast<double>(dims.n_hid) * dims.n_out;
}

OperatingPoint predict(const CostModel &cm, const gru::Dims &dims, double sparsity, int frames) {
  validate(cm);
  if (frames < 1) throw std::invalid_argument("predict: frames must be >= 1");
  const double macs = expected_macs(dims, sparsity);
  const double reads = macs / kWeightsPerRead;
  const double cycles = macs / cm.macs_parallel + static_cast<double>(cm.cycles_frame_fixed);
  OperatingPoint p;
  p.sparsity = sparsity;
  p.latency_ms = 1000.0 * cycles / cm.clock_hz;
  p.energy_nj = frames * (macs * cm.e_mac_nj + reads * cm.e_read_nj + cm.e_frame_fixed_nj + cm.e_fex_frame_nj);
  return p;
}

CalibrationResult calibrate(const OperatingPoint &dense, const OperatingPoint &sparse, const CostModel &tmpl,
                            const CalibrationSetup &setup) {
  validate(tmpl);
  if (setup.frames < 1) throw std::invalid_argument("calibrate: frames must be >= 1");
  const double md = expected_macs(setup.dims, dense.sparsity);
  const double ms = expected_macs(setup.dims, sparse.sparsity);
  if (std::abs(md - ms) < 1e-9) {
    throw Error(ErrorCategory::numeric, "calibration points have the same sparsity: the system is singular");
  }
  CalibrationResult res;
  res.dense_macs = md;
  res.sparse_macs = ms;
  // E/frames = MACs * bundle + constant, exactly through both points.
  const double ed = dense.energy_nj / setup.frames;
  const double es = sparse.energy_nj / setup.frames;
  res.bundle_nj_per_mac = (ed - es) / (md - ms);
  res.frame_constant_nj = ed - res.bundle_nj_per_mac * md;
  if (res.bundle_nj_per_mac < 0.0 || res.frame_constant_nj < 0.0) {
    throw Error(ErrorCategory::numeric,
                fmt::format("calibration needs negative energies (per MAC {:.4g} nJ, per frame {:.4g} nJ)",
                            res.bundle_nj_per_mac, res.frame_constant_nj));
  }

  CostModel cm = tmpl;
  // Share of the bundle spent on reads (each MAC touches half a read).
  const double tmpl_bundle = tmpl.e_mac_nj + tmpl.e_read_nj / kWeightsPerRead;
  const double read_share = tmpl_bundle > 0.0 ? (tmpl.e_read_nj / kWeightsPerRead) / tmpl_bundle : 0.5;
  cm.e_read_nj = kWeightsPerRead * read_share * res.bundle_nj_per_mac;
  cm.e_mac_nj = (1.0 - read_share) * res.bundle_nj_per_mac;
  if (tmpl.e_fex_frame_nj > res.frame_constant_nj) {
    throw Error(ErrorCategory::numeric,
                fmt::format("template FEx energy {:.4g} nJ/frame exceeds the fitted per-frame constant {:.4g} nJ",
                            tmpl.e_fex_frame_nj, res.frame_constant_nj));
  }
  cm.e_frame_fixed_nj = res.frame_constant_nj - tmpl.e_fex_frame_nj;

  const double dense_cycles = dense.latency_ms * 1e-3 * cm.clock_hz;
  const auto datapath = static_cast<double>(ceil_div(static_cast<std::int64_t>(std::llround(std::ceil(md))),
                                                     cm.macs_parallel));
  cm.cycles_frame_fixed = std::llround(dense_cycles - datapath);
  if (cm.cycles_frame_fixed < 0) {
    throw Error(ErrorCategory::numeric, "dense latency is shorter than the datapath cycles alone");
  }
  res.model = cm;
  res.dense_predicted = predict(cm, setup.dims, dense.sparsity, setup.frames);
  res.sparse_predicted = predict(cm, setup.dims, sparse.sparsity, setup.frames);
  res.dense_latency_residual = relative(res.dense_predicted.latency_ms, dense.latency_ms);
  res.dense_energy_residual = relative(res.dense_predicted.energy_nj, dense.energy_nj);
  res.sparse_latency_residual = relative(res.sparse_predicted.latency_ms, sparse.latency_ms);
  res.sparse_energy_residual = relative(res.sparse_predicted.energy_nj, sparse.energy_nj);
  return res;
}

void write_cost_model(std::ostream &out, const CostModel &cm, const CalibrationResult *cal) {
  validate(cm);
  fmt::print(out, "# dkws accelerator cost model (energies in nJ)\n");
  fmt::print(out, "format = {}\nversion = {}\n", kMagic, kVersion);
  fmt::print(out, "macs_parallel = {}\nclock_hz = {}\n", cm.macs_parallel, cm.clock_hz);
  fmt::print(out, "e_mac_nj = {:.17g}\ne_read_nj = {:.17g}\n", cm.e_mac_nj, cm.e_read_nj);
  fmt::print(out, "e_frame_fixed_nj = {:.17g}\ncycles_frame_fixed = {}\n", cm.e_frame_fixed_nj, cm.cycles_frame_fixed);
  fmt::print(out, "e_fex_frame_nj = {:.17g}\nfex_reference_channels = {}\n", cm.e_fex_frame_nj,
             cm.fex_reference_channels);
  if (cal != nullptr) {
    fmt::print(out, "# calibration residuals, (model - target) / target:\n");
    fmt::print(out, "#   dense  latency {:+.6f}  energy {:+.6f}\n", cal->dense_latency_residual,
               cal->dense_energy_residual);
    fmt::print(out, "#   sparse latency {:+.6f}  energy {:+.6f}\n", cal->sparse_latency_residual,
               cal->sparse_energy_residual);
  }
}

CostModel read_cost_model(std::istream &in, const std::string &source) {
  const auto doc = KeyValueDoc::parse(in, source);
  if (doc.get("format") != kMagic) throw Error(ErrorCategory::format, fmt::format("{}: not a cost-model file", source));
  if (doc.get_int("version") != kVersion) {
    throw Error(ErrorCategory::format, fmt::format("{}: unsupported cost-model version {}", source, doc.get("version")));
  }
  CostModel cm;
  const auto small_int = [&](const char *key) {
    const auto v = doc.get_int(key);
    if (v < INT32_MIN || v > INT32_MAX) throw Error(ErrorCategory::validation, fmt::format("{}: {} out of range", source, key));
    return static_cast<int>(v);
  };
  cm.macs_parallel = small_int("macs_parallel");
  cm.clock_hz = small_int("clock_hz");
  cm.e_mac_nj = doc.get_double("e_mac_nj");
  cm.e_read_nj = doc.get_double("e_read_nj");
  cm.e_frame_fixed_nj = doc.get_double("e_frame_fixed_nj");
  cm.cycles_frame_fixed = doc.get_int("cycles_frame_fixed");
  cm.e_fex_frame_nj = doc.get_double("e_fex_frame_nj");
  cm.fex_reference_channels = small_int("fex_reference_channels");
  doc.reject_unused();
  validate(cm);
  return cm;
}

void save_cost_model(const std::string &path, const CostModel &cm, const CalibrationResult *calibration) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, fmt::format("cannot write '{}'", path));
  write_cost_model(out, cm, calibration);
  if (!out) throw Error(ErrorCategory::io, fmt::format("write to '{}' failed", path));
}

CostModel load_cost_model(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, fmt::format("cannot open '{}'", path));
  return read_cost_model(in, path);
}

}  // namespace dkws::accel
