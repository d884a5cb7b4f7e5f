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
#include <limits>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "dkws/fixed_point.hpp"
#include "dkws/formats.hpp"
#include "support/oracles.hpp"

using namespace dkws;

TEST_CASE("QFormat validates its widths") {
  CHECK_THROWS_AS(QFormat(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(QFormat(33, 0), std::invalid_argument);
  CHECK_THROWS_AS(QFormat(12, 12), std::invalid_argument);
  CHECK_THROWS_AS(QFormat(12, -1), std::invalid_argument);
  const QFormat q{12, 11};
  CHECK(q.min_raw() == -2048);
  CHECK(q.max_raw() == 2047);
  CHECK(q.int_bits() == 1);
  CHECK(q.to_string() == "Q{12,11}");
  CHECK(q.lsb() == doctest::Approx(1.0 / 2048));
}

TEST_CASE("quantize rounds half to even and saturates") {
  const QFormat q{8, 2};  // LSB 0.25, range [-32, 31.75]
  CHECK(quantize(0.125, q).raw == 0);   // 0.5 LSB -> even 0
  CHECK(quantize(0.375, q).raw == 2);   // 1.5 LSB -> even 2
  CHECK(quantize(-0.125, q).raw == 0);
  CHECK(quantize(-0.375, q).raw == -2);
  CHECK(quantize(0.3, q).raw == 1);
  CHECK(quantize(0.375, q, Rounding::truncate).raw == 1);
  CHECK(quantize(-0.1, q, Rounding::truncate).raw == -1);  // floor
  CHECK(quantize(100.0, q).raw == 127);
  CHECK(quantize(-100.0, q).raw == -128);
  CHECK(quantize(std::numeric_limits<double>::infinity(), q).raw == 127);
  CHECK(quantize(-std::numeric_limits<double>::infinity(), q).raw == -128);
  CHECK_THROWS_AS(quantize(std::nan(""), q), std::invalid_argument);
  CHECK(quantize(1.0, kActivationFormat).raw == kActivationOne);
}

TEST_CASE("round_shift_right matches an independent division oracle") {
  CHECK(round_shift_right(5, 1, Rounding::nearest_even) == 2);
  CHECK(round_shift_right(7, 1, Rounding::nearest_even) == 4);
  CHECK(round_shift_right(-5, 1, Rounding::nearest_even) == -2);
  CHECK(round_shift_right(-5, 1, Rounding::truncate) == -3);
  CHECK(round_shift_right(9, 0, Rounding::nearest_even) == 9);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20000; ++i) {
    const auto v = static_cast<std::int64_t>(rng() >> 4) - (std::int64_t{1} << 59);
    const int s = static_cast<int>(rng() % 40);
    CHECK(round_shift_right(v, s, Rounding::nearest_even) == oracle::rne_div_pow2(v, s));
  }
}

TEST_CASE("saturating add/sub/neg/abs") {
  const QFormat q{8, 0};
  const auto a = FixedValue::from_raw(100, q);
  const auto b = FixedValue::from_raw(100, q);
  CHECK(sat_add(a, b).raw == 127);
  CHECK(sat_sub(FixedValue::from_raw(-100, q), b).raw == -128);
  CHECK(sat_neg(FixedValue::from_raw(-128, q)).raw == 127);
  CHECK(sat_abs(FixedValue::from_raw(-128, q)).raw == 127);
  CHECK(sat_add(FixedValue::from_raw(3, q), FixedValue::from_raw(-5, q)).raw == -2);
  CHECK_THROWS_AS(sat_add(a, FixedValue::from_raw(1, QFormat{8, 1})), std::invalid_argument);
  CHECK_THROWS_AS(FixedValue::from_raw(128, q), std::out_of_range);
  CHECK(FixedValue::saturated(1000, q).raw == 127);
}

TEST_CASE("mul_shift equals the rounded exact product") {
  std::mt19937_64 rng(2);
  const QFormat a_fmt{16, 14}, b_fmt{12, 6}, out{32, 20};
  for (int i = 0; i < 20000; ++i) {
    const auto a = FixedValue::saturated(static_cast<std::int64_t>(rng() % 65536) - 32768, a_fmt);
    const auto b = FixedValue::saturated(static_cast<std::int64_t>(rng() % 4096) - 2048, b_fmt);
    const std::int64_t exact = std::int64_t{a.raw} * b.raw;  // frac 20, so no shift
    CHECK(mul_shift(a, b, out).raw == exact);
    const QFormat narrow{16, 8};
    const std::int64_t want = std::clamp<std::int64_t>(oracle::rne_div_pow2(exact, 12), -32768, 32767);
    CHECK(mul_shift(a, b, narrow).raw == want);
  }
}

TEST_CASE("rescale_raw moves between fraction widths") {
  CHECK(rescale_raw(3, 0, QFormat{16, 4}, Rounding::nearest_even) == 48);
  CHECK(rescale_raw(24, 4, QFormat{16, 0}, Rounding::nearest_even) == 2);   // 1.5 -> 2
  CHECK(rescale_raw(40, 4, QFormat{16, 0}, Rounding::nearest_even) == 2);   // 2.5 -> 2
  CHECK(rescale_raw(1 << 20, 0, QFormat{16, 4}, Rounding::nearest_even) == 32767);
  CHECK(rescale_raw(-(1 << 20), 0, QFormat{16, 4}, Rounding::nearest_even) == -32768);
}

TEST_CASE("csd_digits is a non-adjacent form that reconstructs the value") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    const auto v = static_cast<std::int64_t>(rng() % 200001) - 100000;
    const auto digits = csd_digits(v);
    std::int64_t sum = 0;
    int last = -2;
    for (auto [sign, pos] : digits) {
      CHECK((sign == 1 || sign == -1));
      CHECK(pos >= last + 2);  // never two adjacent nonzero digits
      last = pos;
      sum += sign * (std::int64_t{1} << pos);
    }
    CHECK(sum == v);
  }
  CHECK(csd_digits(0).empty());
  CHECK(csd_digits(7).size() == 2);  // 8 - 1
  const auto t = csd_terms(7, 4);    // 7/16 = 1/2 - 1/16
  REQUIRE(t.size() == 2);
  CHECK(t[0] == CsdTerm{1, 1});
  CHECK(t[1] == CsdTerm{-1, 4});
  CHECK(csd_value(t) == 7.0 / 16.0);
}

TEST_CASE("shift_mul is bit-identical to mul_shift for one- and two-digit constants") {
  std::mt19937_64 rng(4);
  for (int frac = 4; frac <= 12; ++frac) {
    const QFormat cf{16, frac};
    for (std::int64_t raw = -(1 << 10); raw <= (1 << 10); ++raw) {
      const auto terms = csd_terms(raw, frac);
      if (terms.empty() || terms.size() > 2) continue;
      const auto c = FixedValue::from_raw(raw, cf);
      for (int k = 0; k < 8; ++k) {
        const auto x = FixedValue::saturated(static_cast<std::int64_t>(rng() % (1ull << 32)) - (1ll << 31), kStateFormat);
        CHECK(shift_mul(x, terms, kStateFormat).raw == mul_shift(x, c, kStateFormat).raw);
      }
    }
  }
}

TEST_CASE("shift_mul rejects malformed term lists") {
  const auto x = FixedValue::from_raw(5, kStateFormat);
  std::vector<CsdTerm> none;
  CHECK_THROWS_AS(shift_mul(x, none), std::invalid_argument);
  std::vector<CsdTerm> three{{1, 1}, {1, 3}, {1, 5}};
  CHECK_THROWS_AS(shift_mul(x, three), std::invalid_argument);
  std::vector<CsdTerm> bad_sign{{2, 1}};
  CHECK_THROWS_AS(shift_mul(x, bad_sign), std::invalid_argument);
}

TEST_CASE("left shifts (negative shift terms) saturate instead of wrapping") {
  const auto x = FixedValue::from_raw(kStateFormat.max_raw(), kStateFormat);
  std::vector<CsdTerm> times4{{1, -2}};
  CHECK(shift_mul(x, times4).raw == kStateFormat.max_raw());
  const auto y = FixedValue::from_raw(3, kStateFormat);
  CHECK(shift_mul(y, times4).raw == 12);
}
