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
 * Signed two's-complement fixed-point arithmetic shared by the feature
 * extractor and the recurrent engine.
 *
 * A QFormat{total, frac} number stores an integer `raw` in
 * [-2^(total-1), 2^(total-1) - 1] and represents raw * 2^-frac. Every
 * operation saturates at the format edges; nothing wraps.
 */

#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dkws {

enum class Rounding {
  nearest_even,  // round half to even
  truncate,      // floor (arithmetic shift right), the cheapest hardware option
};

[[noreturn]] void throw_invalid_qformat(int total_bits, int frac_bits);

class QFormat {
 public:
  /// Throws std::invalid_argument unless 4 <= total <= 32 and 0 <= frac < total.
  constexpr QFormat(int total_bits, int frac_bits) : total_(total_bits), frac_(frac_bits) {
    if (total_bits < 4 || total_bits > 32 || frac_bits < 0 || frac_bits >= total_bits) {
      throw_invalid_qformat(total_bits, frac_bits);
    }
  }

  constexpr int total_bits() const noexcept { return total_; }
  constexpr int frac_bits() const noexcept { return frac_; }
  constexpr int int_bits() const noexcept { return total_ - frac_; }

  constexpr std::int64_t min_raw() const noexcept { return -(std::int64_t{1} << (total_ - 1)); }
  constexpr std::int64_t max_raw() const noexcept { return (std::int64_t{1} << (total_ - 1)) - 1; }
  double lsb() const noexcept;

  std::string to_string() const;

  friend bool operator==(const QFormat &, const QFormat &) = default;

 private:
  int total_;
  int frac_;
};

struct FixedValue {
  std::int32_t raw = 0;
  QFormat fmt{16, 0};

  /// Throws std::out_of_range when raw does not fit fmt.
  static FixedValue from_raw(std::int64_t raw, QFormat fmt);
  /// Clamps raw into fmt.
  static FixedValue saturated(std::int64_t raw, QFormat fmt) noexcept;

  double to_double() const noexcept;

  friend bool operator==(const FixedValue &, const FixedValue &) = default;
};

/// One nonzero canonical-signed-digit term: sign * 2^-shift.
/// A negative shift means a left shift.
struct CsdTerm {
  int sign = 1;  // +1 or -1
  int shift = 0;

  friend bool operator==(const CsdTerm &, const CsdTerm &) = default;
};

std::int64_t saturate(std::int64_t value, QFormat fmt) noexcept;

/// value * 2^-shift rounded to an integer; shift >= 0.
std::int64_t round_shift_right(std::int64_t value, int shift, Rounding mode) noexcept;

/// Rescales a raw integer from one fraction-bit count to another, rounding
/// when bits are dropped and saturating to `to`.
std::int64_t rescale_raw(std::int64_t raw, int from_frac, QFormat to, Rounding mode) noexcept;

/// Throws std::invalid_argument on NaN. Infinities saturate.
FixedValue quantize(double value, QFormat fmt, Rounding mode = Rounding::nearest_even);

/// Throws std::invalid_argument when the formats differ.
FixedValue sat_add(FixedValue a, FixedValue b);
FixedValue sat_sub(FixedValue a, FixedValue b);
FixedValue sat_neg(FixedValue a) noexcept;
FixedValue sat_abs(FixedValue a) noexcept;

/// a*b formed exactly in a wide accumulator, then rounded into out_fmt.
FixedValue mul_shift(FixedValue a, FixedValue b, QFormat out_fmt,
                     Rounding mode = Rounding::nearest_even) noexcept;

/// Multiplierless product a * sum(sign * 2^-shift). The shifted partial terms
/// carry guard bits and are rounded once, so the result is bit-identical to
/// mul_shift by the constant the terms spell out. Throws std::invalid_argument
/// for an empty list or more than two terms.
FixedValue shift_mul(FixedValue a, std::span<const CsdTerm> terms, QFormat out_fmt,
                     Rounding mode = Rounding::nearest_even);
FixedValue shift_mul(FixedValue a, std::span<const CsdTerm> terms);

/// Non-adjacent-form digits of `raw`, least significant first, as
/// (sign, bit position) pairs.
std::vector<std::pair<int, int>> csd_digits(std::int64_t raw);

/// CSD terms for a coefficient stored with `frac_bits` fraction bits.
/// Empty for zero.
std::vector<CsdTerm> csd_terms(std::int64_t raw, int frac_bits);

/// Value spelled out by a term list, as a double (exact for sane shifts).
double csd_value(std::span<const CsdTerm> terms);

}  // namespace dkws
