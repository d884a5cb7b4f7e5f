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

#include "dkws/bank_io.hpp"

#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dkws/error.hpp"
#include "dkws/formats.hpp"
#include "dkws/key_value.hpp"

namespace dkws {

namespace {

constexpr const char *kMagic = "dkws-bank";

std::string channel_key(int i, const char *field) { return fmt::format("channel.{}.{}", i, field); }

void fail(const std::string &what) { throw Error(ErrorCategory::validation, what); }

std::int32_t checked_raw(std::int64_t raw, QFormat fmt, const std::string &what) {
  if (raw < fmt.min_raw() || raw > fmt.max_raw()) {
    fail(fmt::format("{} = {} does not fit {}", what, raw, fmt.to_string()));
  }
  return static_cast<std::int32_t>(raw);
}

}  // namespace

void validate_bank(const design::FilterBank &bank) {
  const int n = static_cast<int>(bank.channels.size());
  if (n < 1 || n > design::kMaxChannels) fail(fmt::format("bank has {} channels, expected 1..16", n));
  if (bank.sample_rate_hz <= 0) fail("sample rate must be positive");
  if (bank.env_shift < 1 || bank.env_shift > 30) fail(fmt::format("env_shift {} outside 1..30", bank.env_shift));
  if (bank.enabled_count() == 0) fail("enable mask selects no channel");
  for (int i = 0; i < n; ++i) {
    const auto &ch = bank.channels[i];
    if (i > 0 && !(ch.center_hz > bank.channels[i - 1].center_hz)) {
      fail(fmt::format("channel {} center {} Hz not above channel {}", i, ch.center_hz, i - 1));
    }
    if (!(ch.design_hz > 0.0) || ch.design_hz >= 0.5 * bank.sample_rate_hz) {
      fail(fmt::format("channel {} design center {} Hz outside (0, fs/2)", i, ch.design_hz));
    }
    for (int s = 0; s < 2; ++s) {
      const auto &sos = ch.sos[s];
      if (sos.frac_b != bank.frac_b || sos.frac_a != bank.frac_a) {
        fail(fmt::format("channel {} section {} fraction bits differ from the bank", i, s));
      }
      if (!design::stability_check(sos)) fail(fmt::format("channel {} section {} is unstable", i, s));
    }
    if (ch.offset.fmt != kLogFormat || ch.scale.fmt != kScaleFormat) {
      fail(fmt::format("channel {} normalization has the wrong format", i));
    }
  }
}

void write_bank(std::ostream &out, const design::FilterBank &bank) {
  validate_bank(bank);
  fmt::print(out, "# dkws filter bank: raw coefficient integers, real value = raw * 2^-frac\n");
  fmt::print(out, "format = {}\nversion = {}\n", kMagic, kBankFileVersion);
  fmt::print(out, "sample_rate = {}\nn_channels = {}\n", bank.sample_rate_hz, bank.channels.size());
  fmt::print(out, "b_bits = {}\na_bits = {}\nfrac_b = {}\nfrac_a = {}\n", bank.b_bits, bank.a_bits, bank.frac_b,
             bank.frac_a);
  fmt::print(out, "state_frac = {}\nlog_frac = {}\nscale_frac = {}\n", kStateFormat.frac_bits(),
             kLogFormat.frac_bits(), kScaleFormat.frac_bits());
  fmt::print(out, "env_shift = {}\nenable_mask = {:#06x}\n", bank.env_shift, bank.enable_mask());
  for (int i = 0; i < static_cast<int>(bank.channels.size()); ++i) {
    const auto &ch = bank.channels[i];
    fmt::print(out, "\n{} = {:.17g}\n", channel_key(i, "center_hz"), ch.center_hz);
    fmt::print(out, "{} = {:.17g}\n", channel_key(i, "design_hz"), ch.design_hz);
    fmt::print(out, "{} = {:.17g}\n", channel_key(i, "q"), ch.q);
    for (int s = 0; s < 2; ++s) {
      const auto &sos = ch.sos[s];
      fmt::print(out, "channel.{}.sos{} = {} {} {} {}\n", i, s, sos.b0.raw, sos.b2.raw, sos.a1.raw, sos.a2.raw);
    }
    fmt::print(out, "{} = {}\n{} = {}\n", channel_key(i, "offset"), ch.offset.raw, channel_key(i, "scale"),
               ch.scale.raw);
  }
}

void save_bank(const std::string &path, const design::FilterBank &bank) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, fmt::format("cannot write '{}'", path));
  write_bank(out, bank);
  if (!out) throw Error(ErrorCategory::io, fmt::format("write to '{}' failed", path));
}

design::FilterBank read_bank(std::istream &in, const std::string &source) {
  const auto doc = KeyValueDoc::parse(in, source);
  if (doc.get("format") != kMagic) {
    throw Error(ErrorCategory::format, fmt::format("{}: not a filter-bank file", source));
  }
  if (doc.get_int("version") != kBankFileVersion) {
    throw Error(ErrorCategory::format, fmt::format("{}: unsupported bank version {}", source, doc.get("version")));
  }
  if (doc.get_int("state_frac") != kStateFormat.frac_bits() || doc.get_int("log_frac") != kLogFormat.frac_bits() ||
      doc.get_int("scale_frac") != kScaleFormat.frac_bits()) {
    fail(fmt::format("{}: datapath formats differ from this build", source));
  }

  design::FilterBank bank;
  bank.sample_rate_hz = static_cast<int>(doc.get_int("sample_rate"));
  const auto n = doc.get_int("n_channels");
  if (n < 1 || n > design::kMaxChannels) fail(fmt::format("{}: n_channels {} outside 1..16", source, n));
  const auto b_bits = doc.get_int("b_bits");
  const auto a_bits = doc.get_int("a_bits");
  const auto frac_b = doc.get_int("frac_b");
  const auto frac_a = doc.get_int("frac_a");
  if (b_bits < 4 || b_bits > 32 || a_bits < 4 || a_bits > 32 || frac_b < 0 || frac_b >= b_bits || frac_a < 0 ||
      frac_a >= a_bits) {
    fail(fmt::format("{}: invalid coefficient formats {}b/{}b with {}/{} fraction bits", source, b_bits, a_bits,
                     frac_b, frac_a));
  }
  bank.b_bits = static_cast<int>(b_bits);
  bank.a_bits = static_cast<int>(a_bits);
  bank.frac_b = static_cast<int>(frac_b);
  bank.frac_a = static_cast<int>(frac_a);
  const QFormat b_fmt{bank.b_bits, bank.frac_b};
  const QFormat a_fmt{bank.a_bits, bank.frac_a};
  bank.env_shift = static_cast<int>(doc.get_int("env_shift"));
  const auto mask = doc.get_int("enable_mask");
  if (mask <= 0 || mask >= (std::int64_t{1} << n)) {
    fail(fmt::format("{}: enable_mask {:#x} invalid for {} channels", source, mask, n));
  }

  for (int i = 0; i < n; ++i) {
    design::BankChannel ch;
    ch.center_hz = doc.get_double(channel_key(i, "center_hz"));
    ch.design_hz = doc.get_double(channel_key(i, "design_hz"));
    ch.q = doc.get_double(channel_key(i, "q"));
    for (int s = 0; s < 2; ++s) {
      const std::string key = fmt::format("channel.{}.sos{}", i, s);
      const auto raw = doc.get_int_list(key);
      if (raw.size() != 4) {
        throw Error(ErrorCategory::format, fmt::format("{}: {} needs 4 integers (b0 b2 a1 a2)", source, key));
      }
      checked_raw(raw[0], b_fmt, key + " b0");
      checked_raw(raw[1], b_fmt, key + " b2");
      checked_raw(raw[2], a_fmt, key + " a1");
      checked_raw(raw[3], a_fmt, key + " a2");
      ch.sos[s] = design::make_quantized_sos(raw[0], raw[1], raw[2], raw[3], b_fmt, a_fmt);
    }
    ch.offset = FixedValue{checked_raw(doc.get_int(channel_key(i, "offset")), kLogFormat, channel_key(i, "offset")),
                           kLogFormat};
    ch.scale = FixedValue{checked_raw(doc.get_int(channel_key(i, "scale")), kScaleFormat, channel_key(i, "scale")),
                          kScaleFormat};
    ch.enabled = ((mask >> i) & 1) != 0;
    bank.channels.push_back(ch);
  }
  doc.reject_unused();
  validate_bank(bank);
  return bank;
}

design::FilterBank load_bank(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, fmt::format("cannot open '{}'", path));
  return read_bank(in, path);
}

}  // namespace dkws
