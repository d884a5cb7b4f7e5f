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

#include "dkws/fex.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dkws/error.hpp"
#include "dkws/formats.hpp"
#include "dkws/key_value.hpp"

namespace dkws::fex {

namespace {

constexpr int kLogTableBits = 6;

// round(64 * log2(1 + i/64)): the mantissa correction of log2_approx.
const std::array<std::int32_t, 1 << kLogTableBits> &log_table() {
  static const auto table = [] {
    std::array<std::int32_t, 1 << kLogTableBits> t{};
    for (int i = 0; i < static_cast<int>(t.size()); ++i) {
      t[i] = static_cast<std::int32_t>(std::lround(64.0 * std::log2(1.0 + i / 64.0)));
    }
    return t;
  }();
  return table;
}

FixedValue coefficient_product(FixedValue x, FixedValue coeff, const std::optional<std::vector<CsdTerm>> &csd) {
  if (csd) return shift_mul(x, *csd, kStateFormat);
  return mul_shift(x, coeff, kStateFormat);
}

}  // namespace

FixedValue biquad_step(FixedValue x, const design::QuantizedSOS &c, BiquadState &state) {
  const FixedValue xs{static_cast<std::int32_t>(
                          rescale_raw(x.raw, x.fmt.frac_bits(), kStateFormat, Rounding::nearest_even)),
                      kStateFormat};
  const FixedValue s1{static_cast<std::int32_t>(saturate(state.s1, kStateFormat)), kStateFormat};
  const FixedValue s2{static_cast<std::int32_t>(saturate(state.s2, kStateFormat)), kStateFormat};

  const FixedValue b0x = coefficient_product(xs, c.b0, c.csd_b0);
  const FixedValue y = sat_add(b0x, s1);
  const FixedValue a1y = coefficient_product(y, c.a1, c.csd_a1);
  const FixedValue a2y = coefficient_product(y, c.a2, c.csd_a2);
  const FixedValue b2x = c.b2.raw == -c.b0.raw ? sat_neg(b0x) : mul_shift(xs, c.b2, kStateFormat);
  state.s1 = sat_sub(s2, a1y).raw;
  state.s2 = sat_sub(b2x, a2y).raw;
  return y;
}

FixedValue envelope_detect(FixedValue y, FixedValue env, int alpha_shift) {
  if (alpha_shift < 1 || alpha_shift > 30) throw std::invalid_argument("envelope_detect: alpha_shift outside 1..30");
  if (!(y.fmt == env.fmt)) throw std::invalid_argument("envelope_detect: y and env formats differ");
  const std::int64_t magnitude = saturate(std::abs(std::int64_t{y.raw}), env.fmt);
  const std::int64_t d = magnitude - env.raw;
  // Rounding the step magnitude up makes the smoother reach its target exactly.
  const std::int64_t step = (std::abs(d) + (std::int64_t{1} << alpha_shift) - 1) >> alpha_shift;
  return FixedValue::saturated(env.raw + (d < 0 ? -step : step), env.fmt);
}

FixedValue log2_approx(std::int64_t raw) {
  if (raw < 1) throw std::invalid_argument("log2_approx: input must be >= 1");
  int lead = 63;
  while (((raw >> lead) & 1) == 0) --lead;
  const std::int64_t below = raw - (std::int64_t{1} << lead);
  const std::int64_t mantissa =
      lead >= kLogTableBits ? below >> (lead - kLogTableBits) : below << (kLogTableBits - lead);
  const std::int64_t out = (std::int64_t{lead} << kLogFormat.frac_bits()) + log_table()[mantissa];
  return FixedValue::saturated(out, kLogFormat);
}

FixedValue post_process(FixedValue env, FixedValue offset, FixedValue scale) {
  if (env.raw < 0) throw std::invalid_argument("post_process: negative envelope");
  if (!(offset.fmt == kLogFormat) || !(scale.fmt == kScaleFormat)) {
    throw std::invalid_argument("post_process: offset/scale in unexpected formats");
  }
  const FixedValue v = log2_approx(std::max<std::int64_t>(env.raw, 1));
  const std::int64_t product = std::int64_t{scale.raw} * (std::int64_t{v.raw} - offset.raw);
  const std::int64_t out = round_shift_right(product, kScaleFormat.frac_bits(), Rounding::nearest_even);
  return FixedValue{static_cast<std::int32_t>(std::clamp<std::int64_t>(out, 0, kFeatureMax)), kFeatureFormat};
}

OpCounts &OpCounts::operator+=(const OpCounts &o) {
  multiplies += o.multiplies;
  shifts += o.shifts;
  additions += o.additions;
  return *this;
}

ChannelCost channel_cost(const design::FilterBank &bank) {
  const auto st = design::analyze_structure(bank);
  ChannelCost c;
  c.per_sample.multiplies = static_cast<std::uint64_t>(st.multipliers);
  // Envelope: |y|, difference, round-up add, accumulate; one shift.
  c.per_sample.shifts = static_cast<std::uint64_t>(st.shifts) + 1;
  c.per_sample.additions = static_cast<std::uint64_t>(st.adders) + 4;
  // Frame end: leading-one + table add, offset subtract, scale multiply,
  // rounding shift, clamp.
  c.per_frame = OpCounts{1, 1, 3};
  return c;
}

FeatureExtractor::FeatureExtractor(design::FilterBank bank) : bank_(std::move(bank)) {
  enabled_ = bank_.enabled_indices();
  if (enabled_.empty()) throw Error(ErrorCategory::validation, "feature extractor needs at least one enabled channel");
  if (bank_.env_shift < 1) throw Error(ErrorCategory::validation, "bank env_shift must be >= 1");
  cost_ = channel_cost(bank_);
  reset();
}

void FeatureExtractor::reset() {
  state_.assign(enabled_.size(), {});
  env_.assign(enabled_.size(), 0);
  phase_ = 0;
  frame_index_ = 0;
  ops_ = {};
}

std::optional<FeatureFrame> FeatureExtractor::push(std::int32_t sample) {
  if (sample < kSampleFormat.min_raw() || sample > kSampleFormat.max_raw()) {
    throw std::invalid_argument(fmt::format("sample {} is not a 12-bit value", sample));
  }
  const FixedValue x{sample, kSampleFormat};
  for (std::size_t k = 0; k < enabled_.size(); ++k) {
    const auto &ch = bank_.channels[enabled_[k]];
    const FixedValue y0 = biquad_step(x, ch.sos[0], state_[k][0]);
    const FixedValue y1 = biquad_step(y0, ch.sos[1], state_[k][1]);
    env_[k] = envelope_detect(y1, FixedValue{static_cast<std::int32_t>(env_[k]), kStateFormat}, bank_.env_shift).raw;
    ops_ += cost_.per_sample;
  }
  if (++phase_ < kFrameLength) return std::nullopt;

  phase_ = 0;
  FeatureFrame frame;
  frame.t = frame_index_++;
  frame.values.reserve(enabled_.size());
  for (std::size_t k = 0; k < enabled_.size(); ++k) {
    const auto &ch = bank_.channels[enabled_[k]];
    frame.values.push_back(
        post_process(FixedValue{static_cast<std::int32_t>(env_[k]), kStateFormat}, ch.offset, ch.scale).raw);
    ops_ += cost_.per_frame;
  }
  return frame;
}

std::vector<FeatureFrame> extract_features(std::span<const std::int16_t> samples, const design::FilterBank &bank,
                                           OpCounts *ops) {
  FeatureExtractor fx(bank);
  std::vector<FeatureFrame> frames;
  frames.reserve(samples.size() / kFrameLength);
  for (std::int16_t s : samples) {
    if (auto f = fx.push(s)) frames.push_back(std::move(*f));
  }
  if (ops != nullptr) *ops = fx.ops();
  return frames;
}

design::FilterBank select_channels(const design::FilterBank &bank, std::uint32_t mask) {
  const auto n = bank.channels.size();
  if (mask == 0) throw std::invalid_argument("select_channels: empty mask");
  if (n < 32 && (mask >> n) != 0) {
    throw std::invalid_argument(fmt::format("select_channels: mask {:#x} exceeds {} channels", mask, n));
  }
  design::FilterBank out = bank;
  for (std::size_t i = 0; i < n; ++i) out.channels[i].enabled = ((mask >> i) & 1u) != 0;
  return out;
}

void write_feature_csv(std::ostream &out, const design::FilterBank &bank, std::span<const FeatureFrame> frames) {
  const auto idx = bank.enabled_indices();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    fmt::print(out, "{}ch{:02d}_{:.1f}Hz", k == 0 ? "" : ",", idx[k], bank.channels[idx[k]].center_hz);
  }
  out << '\n';
  for (const auto &f : frames) {
    if (f.values.size() != idx.size()) {
      throw std::invalid_argument("write_feature_csv: frame width differs from the enabled channel count");
    }
    fmt::print(out, "{}\n", fmt::join(f.values, ","));
  }
}

void save_feature_csv(const std::string &path, const design::FilterBank &bank, std::span<const FeatureFrame> frames) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, fmt::format("cannot write '{}'", path));
  write_feature_csv(out, bank, frames);
  if (!out) throw Error(ErrorCategory::io, fmt::format("write to '{}' failed", path));
}

FeatureTable read_feature_csv(std::istream &in, const std::string &source) {
  FeatureTable table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw Error(ErrorCategory::format, fmt::format("{}: missing header", source));
  }
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
  }
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    FeatureFrame f;
    f.t = static_cast<int>(table.frames.size());
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto v = parse_int(cell);
      if (!v || *v < 0 || *v > kFeatureMax) {
        throw Error(ErrorCategory::format, fmt::format("{}:{}: '{}' is not a 12-bit feature", source, row, cell));
      }
      f.values.push_back(static_cast<std::int32_t>(*v));
    }
    if (f.values.size() != table.columns.size()) {
      throw Error(ErrorCategory::format, fmt::format("{}:{}: {} values for {} columns", source, row, f.values.size(),
                                                     table.columns.size()));
    }
    table.frames.push_back(std::move(f));
  }
  return table;
}

FeatureTable load_feature_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, fmt::format("cannot open '{}'", path));
  return read_feature_csv(in, path);
}

}  // namespace dkws::fex
