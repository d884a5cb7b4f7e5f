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

#include "dkws/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dkws {

namespace {

using wide_t = __int128;

std::int64_t saturate_wide(wide_t value, QFormat fmt) noexcept {
  if (value > fmt.max_raw()) return fmt.max_raw();
  if (value < fmt.min_raw()) return fmt.min_raw();
  return static_cast<std::int64_t>(value);
}

wide_t round_shift_right_wide(wide_t value, int shift, Rounding mode) noexcept {
  if (shift <= 0) return value;
  if (shift >= 126) return value < 0 && mode == Rounding::truncate ? -1 : 0;
  const wide_t q = value >> shift;  // floor
  if (mode == Rounding::truncate) return q;
  const wide_t rem = value - (q << shift);
  const wide_t half = wide_t{1} << (shift - 1);
  if (rem > half || (rem == half && (q & 1) != 0)) return q + 1;
  return q;
}

// value * 2^-shift for any sign of shift, rounded, then saturated to fmt.
std::int64_t scale_into(wide_t value, int shift, QFormat fmt, Rounding mode) noexcept {
  if (shift >= 0) return saturate_wide(round_shift_right_wide(value, shift, mode), fmt);
  const int left = -shift;
  if (value == 0) return 0;
  // Anything that survives a left shift past the format width saturates.
  if (left >= 64) return value > 0 ? fmt.max_raw() : fmt.min_raw();
  const wide_t limit = wide_t{1} << (127 - left);
  if (value >= limit || value <= -limit) return value > 0 ? fmt.max_raw() : fmt.min_raw();
  return saturate_wide(value * (wide_t{1} << left), fmt);
}

void require_same_format(const FixedValue &a, const FixedValue &b) {
  if (!(a.fmt == b.fmt)) {
    throw std::invalid_argument(
        fmt::format("fixed-point format mismatch: {} vs {}", a.fmt.to_string(), b.fmt.to_string()));
  }
}

}  // namespace

void throw_invalid_qformat(int total_bits, int frac_bits) {
  if (total_bits < 4 || total_bits > 32) {
    throw std::invalid_argument(fmt::format("QFormat total bits {} outside 4..32", total_bits));
  }
  throw std::invalid_argument(
      fmt::format("QFormat fraction bits {} outside 0..{}", frac_bits, total_bits - 1));
}

double QFormat::lsb() const noexcept { return std::ldexp(1.0, -frac_); }

std::string QFormat::to_string() const { return fmt::format("Q{{{},{}}}", total_, frac_); }

FixedValue FixedValue::from_raw(std::int64_t raw, QFormat fmt) {
  if (raw < fmt.min_raw() || raw > fmt.max_raw()) {
    throw std::out_of_range(fmt::format("raw {} does not fit {}", raw, fmt.to_string()));
  }
  return FixedValue{static_cast<std::int32_t>(raw), fmt};
}

FixedValue FixedValue::saturated(std::int64_t raw, QFormat fmt) noexcept {
  return FixedValue{static_cast<std::int32_t>(saturate(raw, fmt)), fmt};
}

double FixedValue::to_double() const noexcept { return std::ldexp(static_cast<double>(raw), -fmt.frac_bits()); }

std::int64_t saturate(std::int64_t value, QFormat fmt) noexcept {
  return std::clamp(value, fmt.min_raw(), fmt.max_raw());
}

std::int64_t round_shift_right(std::int64_t value, int shift, Rounding mode) noexcept {
  return static_cast<std::int64_t>(round_shift_right_wide(value, shift, mode));
}

std::int64_t rescale_raw(std::int64_t raw, int from_frac, QFormat to, Rounding mode) noexcept {
  return scale_into(raw, from_frac - to.frac_bits(), to, mode);
}

FixedValue quantize(double value, QFormat fmt, Rounding mode) {
  if (std::isnan(value)) throw std::invalid_argument("quantize: NaN input");
  const double scaled = std::ldexp(value, fmt.frac_bits());
  if (scaled >= static_cast<double>(fmt.max_raw())) return FixedValue{static_cast<std::int32_t>(fmt.max_raw()), fmt};
  if (scaled <= static_cast<double>(fmt.min_raw())) return FixedValue{static_cast<std::int32_t>(fmt.min_raw()), fmt};
  double rounded = std::floor(scaled);
  if (mode == Rounding::nearest_even) {
    const double rem = scaled - rounded;  // exact: |scaled| < 2^31
    if (rem > 0.5 || (rem == 0.5 && std::fmod(rounded, 2.0) != 0.0)) rounded += 1.0;
  }
  return FixedValue::saturated(static_cast<std::int64_t>(rounded), fmt);
}

FixedValue sat_add(FixedValue a, FixedValue b) {
  require_same_format(a, b);
  return FixedValue::saturated(std::int64_t{a.raw} + b.raw, a.fmt);
}

FixedValue sat_sub(FixedValue a, FixedValue b) {
  require_same_format(a, b);
  return FixedValue::saturated(std::int64_t{a.raw} - b.raw, a.fmt);
}

FixedValue sat_neg(FixedValue a) noexcept { return FixedValue::saturated(-std::int64_t{a.raw}, a.fmt); }

FixedValue sat_abs(FixedValue a) noexcept {
  return FixedValue::saturated(a.raw < 0 ? -std::int64_t{a.raw} : std::int64_t{a.raw}, a.fmt);
}

FixedValue mul_shift(FixedValue a, FixedValue b, QFormat out_fmt, Rounding mode) noexcept {
  const wide_t product = wide_t{a.raw} * b.raw;
  const int shift = a.fmt.frac_bits() + b.fmt.frac_bits() - out_fmt.frac_bits();
  return FixedValue{static_cast<std::int32_t>(scale_into(product, shift, out_fmt, mode)), out_fmt};
}

FixedValue shift_mul(FixedValue a, std::span<const CsdTerm> terms, QFormat out_fmt, Rounding mode) {
  if (terms.empty()) throw std::invalid_argument("shift_mul: empty shift list");
  if (terms.size() > 2) throw std::invalid_argument("shift_mul: more than two CSD terms");
  int guard = 0;
  for (const auto &t : terms) {
    if (t.sign != 1 && t.sign != -1) throw std::invalid_argument("shift_mul: sign must be +1 or -1");
    guard = std::max(guard, t.shift);
  }
  // Every partial term is aligned to `guard` extra fraction bits, so the sum
  // is exact and a single rounding follows.
  wide_t acc = 0;
  for (const auto &t : terms) {
    const int up = guard - t.shift;
    if (up > 64) throw std::invalid_argument("shift_mul: shift span too wide");
    acc += t.sign * (wide_t{a.raw} << up);
  }
  const int shift = guard + a.fmt.frac_bits() - out_fmt.frac_bits();
  return FixedValue{static_cast<std::int32_t>(scale_into(acc, shift, out_fmt, mode)), out_fmt};
}

FixedValue shift_mul(FixedValue a, std::span<const CsdTerm> terms) {
  return shift_mul(a, terms, a.fmt, Rounding::nearest_even);
}

std::vector<std::pair<int, int>> csd_digits(std::int64_t raw) {
  std::vector<std::pair<int, int>> digits;
  wide_t v = raw;
  int pos = 0;
  while (v != 0) {
    if ((v & 1) != 0) {
      // Non-adjacent form: pick the digit that leaves a multiple of 4.
      const int digit = ((v & 3) == 3) ? -1 : 1;
      digits.emplace_back(digit, pos);
      v -= digit;
    }
    v >>= 1;
    ++pos;
  }
  return digits;
}

std::vector<CsdTerm> csd_terms(std::int64_t raw, int frac_bits) {
  std::vector<CsdTerm> terms;
  for (auto [sign, pos] : csd_digits(raw)) terms.push_back(CsdTerm{sign, frac_bits - pos});
  // Largest magnitude first reads naturally: (+,2) before (-,6).
  std::sort(terms.begin(), terms.end(), [](const CsdTerm &l, const CsdTerm &r) { return l.shift < r.shift; });
  return terms;
}

double csd_value(std::span<const CsdTerm> terms) {
  double v = 0.0;
  for (const auto &t : terms) v += t.sign * std::ldexp(1.0, -t.shift);
  return v;
}

}  // namespace dkws
