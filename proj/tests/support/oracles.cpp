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

#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

namespace oracle {

using dkws::gru::NetworkWeights;
using dkws::gru::WeightMatrix;

std::int64_t rne_div_pow2(std::int64_t v, int shift) {
  if (shift <= 0) return v;
  const std::int64_t d = std::int64_t{1} << shift;
  std::int64_t q = v / d;
  std::int64_t r = v % d;
  if (r < 0) {  // make the remainder non-negative (floor division)
    r += d;
    q -= 1;
  }
  if (2 * r > d || (2 * r == d && (q % 2 != 0))) ++q;
  return q;
}

namespace {

int table_slot(std::int64_t m, int e_min) {
  // real = m * 2^(e_min-14); table grid step is 1/16.
  const int shift = 14 - 4 - e_min;
  std::int64_t k = shift >= 0 ? rne_div_pow2(m, shift) : m * (std::int64_t{1} << std::min(-shift, 40));
  k = std::clamp<std::int64_t>(k, -128, 127);
  return static_cast<int>(k) + 128;
}

std::int32_t clamp32(std::int64_t v) { return static_cast<std::int32_t>(std::clamp<std::int64_t>(v, INT32_MIN, INT32_MAX)); }

// Accumulator for one gate in units 2^(e_min-14).
std::vector<std::int32_t> gate_acc(const WeightMatrix &wx, const std::vector<std::int32_t> &x, const WeightMatrix *wh,
                                   const std::vector<std::int32_t> &h, const std::vector<std::int32_t> *bias,
                                   int e_min) {
  std::vector<std::int32_t> out(static_cast<std::size_t>(wx.rows));
  for (int i = 0; i < wx.rows; ++i) {
    std::int64_t acc = bias ? (*bias)[i] : 0;
    for (int j = 0; j < wx.cols; ++j) acc += std::int64_t{wx.at(i, j)} * x[j] * (std::int64_t{1} << (wx.scale_exp - e_min));
    if (wh) {
      for (int j = 0; j < wh->cols; ++j) {
        acc += std::int64_t{wh->at(i, j)} * h[j] * (std::int64_t{1} << (wh->scale_exp - e_min));
      }
    }
    out[i] = clamp32(acc);
  }
  return out;
}

}  // namespace

std::vector<std::int32_t> gru_step(const std::vector<std::int32_t> &x, const std::vector<std::int32_t> &h,
                                   const NetworkWeights &w) {
  const auto &t = dkws::gru::tables();
  const int er = std::min(w.W_xr.scale_exp, w.W_hr.scale_exp);
  const int eu = std::min(w.W_xu.scale_exp, w.W_hu.scale_exp);
  const int ec = std::min(w.W_xc.scale_exp, w.W_hc.scale_exp);
  const auto mr = gate_acc(w.W_xr, x, &w.W_hr, h, &w.b_r, er);
  const auto mu = gate_acc(w.W_xu, x, &w.W_hu, h, &w.b_u, eu);
  const auto mxc = gate_acc(w.W_xc, x, nullptr, h, &w.b_c, ec);
  const std::vector<std::int32_t> none(static_cast<std::size_t>(w.dims.n_in), 0);
  // W_hc * h alone: reuse gate_acc with a zero x part.
  WeightMatrix zero_x = w.W_xc;
  std::fill(zero_x.data.begin(), zero_x.data.end(), std::int8_t{0});
  const auto mhc = gate_acc(zero_x, none, &w.W_hc, h, nullptr, ec);
  std::vector<std::int32_t> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const std::int64_t r = t.sigmoid[table_slot(mr[i], er)];
    const std::int64_t u = t.sigmoid[table_slot(mu[i], eu)];
    const std::int64_t pre = std::int64_t{mxc[i]} + rne_div_pow2(r * mhc[i], 14);
    const std::int64_t c = t.tanh[table_slot(pre, ec)];
    out[i] = static_cast<std::int32_t>(rne_div_pow2((16384 - u) * h[i] + u * c, 14));
  }
  return out;
}

std::vector<std::int32_t> fc(const std::vector<std::int32_t> &h, const NetworkWeights &w) {
  std::vector<std::int32_t> out(static_cast<std::size_t>(w.dims.n_out));
  for (int o = 0; o < w.dims.n_out; ++o) {
    std::int64_t acc = w.b_fc[o];
    for (int j = 0; j < w.dims.n_hid; ++j) acc += std::int64_t{w.W_fc.at(o, j)} * h[j];
    out[o] = clamp32(acc);
  }
  return out;
}

std::vector<double> gru_step_real(const std::vector<double> &x, const std::vector<double> &h,
                                  const NetworkWeights &w) {
  const auto mv = [](const WeightMatrix &m, const std::vector<double> &v, int i) {
    double s = 0;
    for (int j = 0; j < m.cols; ++j) s += m.at(i, j) * std::ldexp(1.0, m.scale_exp) * v[j];
    return s;
  };
  const auto bias = [](std::int32_t b, int e_min) { return std::ldexp(static_cast<double>(b), e_min - 14); };
  const int er = std::min(w.W_xr.scale_exp, w.W_hr.scale_exp);
  const int eu = std::min(w.W_xu.scale_exp, w.W_hu.scale_exp);
  const int ec = std::min(w.W_xc.scale_exp, w.W_hc.scale_exp);
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const int k = static_cast<int>(i);
    const double r = 1.0 / (1.0 + std::exp(-(mv(w.W_xr, x, k) + mv(w.W_hr, h, k) + bias(w.b_r[i], er))));
    const double u = 1.0 / (1.0 + std::exp(-(mv(w.W_xu, x, k) + mv(w.W_hu, h, k) + bias(w.b_u[i], eu))));
    const double c = std::tanh(mv(w.W_xc, x, k) + bias(w.b_c[i], ec) + r * mv(w.W_hc, h, k));
    out[i] = (1.0 - u) * h[i] + u * c;
  }
  return out;
}

std::uint32_t crc32_bitwise(const std::uint8_t *data, std::size_t size) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i) {
    crc ^= data[i];
    for (int b = 0; b < 8; ++b) crc = (crc & 1u) ? (crc >> 1) ^ 0xEDB88320u : crc >> 1;
  }
  return ~crc;
}

double FloatBiquad::step(double x) {
  const double y = c.b0 * x + c.b1 * x1 + c.b2 * x2 - c.a1 * y1 - c.a2 * y2;
  x2 = x1;
  x1 = x;
  y2 = y1;
  y1 = y;
  return y;
}

double magnitude(const std::vector<dkws::design::SOSCoefficients> &sections, double freq_hz, double fs) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / fs);
  std::complex<double> h = 1.0;
  for (const auto &s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z1 * z1) / (1.0 + s.a1 * z1 + s.a2 * z1 * z1);
  return std::abs(h);
}

std::vector<std::uint8_t> wav_bytes(int rate, const std::vector<std::int16_t> &samples, const std::string &extra_id,
                                    const std::vector<std::uint8_t> &extra) {
  std::vector<std::uint8_t> b;
  const auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  const auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  const auto tag = [&](const char *t) { b.insert(b.end(), t, t + 4); };
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
  const std::uint32_t extra_size = extra_id.empty() ? 0 : static_cast<std::uint32_t>(8 + extra.size() + extra.size() % 2);
  tag("RIFF");
  u32(4 + 24 + extra_size + 8 + data_size);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(1);
  u16(1);
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate) * 2);
  u16(2);
  u16(16);
  if (!extra_id.empty()) {
    tag(extra_id.c_str());
    u32(static_cast<std::uint32_t>(extra.size()));
    b.insert(b.end(), extra.begin(), extra.end());
    if (extra.size() % 2) b.push_back(0);
  }
  tag("data");
  u32(data_size);
  for (auto s : samples) u16(static_cast<std::uint16_t>(s));
  return b;
}

std::string temp_dir(const std::string &tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("dkws_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace oracle
