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
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "dkws/bank_io.hpp"
#include "dkws/error.hpp"
#include "dkws/fex.hpp"
#include "dkws/formats.hpp"
#include "dkws/key_value.hpp"
#include "dkws/synth.hpp"
#include "dkws/dataset.hpp"
#include "support/oracles.hpp"

using namespace dkws;

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

std::string bank_text(const design::FilterBank &bank) {
  std::ostringstream out;
  write_bank(out, bank);
  return out.str();
}

design::FilterBank parse_bank(const std::string &text) {
  std::istringstream in(text);
  return read_bank(in, "test");
}

std::string replace_line(std::string text, const std::string &key, const std::string &value) {
  const auto pos = text.find(key + " = ");
  REQUIRE(pos != std::string::npos);
  const auto end = text.find('\n', pos);
  return text.replace(pos, end - pos, key + " = " + value);
}

}  // namespace

TEST_CASE("KeyValueDoc parses comments, blanks and trimmed values") {
  std::istringstream in("# comment\n\n  a = 1 \nb=0x10\nname = hello world\nlist = 1 -2 3\nx = 2.5\n");
  auto doc = KeyValueDoc::parse(in, "t");
  CHECK(doc.get("name") == "hello world");
  CHECK(doc.get_int("a") == 1);
  CHECK(doc.get_int("b") == 16);
  CHECK(doc.get_double("x") == 2.5);
  CHECK(doc.get_int_list("list") == std::vector<std::int64_t>{1, -2, 3});
  CHECK(doc.has("a"));
  CHECK_FALSE(doc.find("missing").has_value());
  CHECK(category_of([&] { doc.get("missing"); }) == ErrorCategory::format);
  doc.reject_unused();  // every key was read
}

TEST_CASE("KeyValueDoc rejects malformed documents") {
  const auto parse = [](const std::string &text) {
    std::istringstream in(text);
    return KeyValueDoc::parse(in, "t");
  };
  CHECK(category_of([&] { parse("no equals sign\n"); }) == ErrorCategory::format);
  CHECK(category_of([&] { parse(" = 3\n"); }) == ErrorCategory::format);
  CHECK(category_of([&] { parse("a = 1\na = 2\n"); }) == ErrorCategory::format);
  auto doc = parse("a = 1\ntypo = 2\n");
  doc.get_int("a");
  CHECK(category_of([&] { doc.reject_unused(); }) == ErrorCategory::format);
  auto bad = parse("n = 12abc\nd = inf\n");
  CHECK(category_of([&] { bad.get_int("n"); }) == ErrorCategory::format);
  CHECK(category_of([&] { bad.get_double("d"); }) == ErrorCategory::format);
}

TEST_CASE("parse_int / parse_double are strict") {
  CHECK(parse_int("42") == 42);
  CHECK(parse_int("-7") == -7);
  CHECK(parse_int("0x1ff8") == 0x1ff8);
  CHECK_FALSE(parse_int("").has_value());
  CHECK_FALSE(parse_int("1.5").has_value());
  CHECK_FALSE(parse_int("12 3").has_value());
  CHECK(parse_double("1e-3") == 1e-3);
  CHECK_FALSE(parse_double("nan").has_value());
  CHECK_FALSE(parse_double("1.0x").has_value());
}

TEST_CASE("bank file round trip is lossless and byte-stable") {
  const auto bank = fex::select_channels(design::default_filter_bank(), 0x1ff8);
  const auto text = bank_text(bank);
  const auto back = parse_bank(text);
  CHECK(back.enable_mask() == 0x1ff8u);
  CHECK(back.b_bits == 12);
  CHECK(back.a_bits == 8);
  CHECK(back.env_shift == bank.env_shift);
  REQUIRE(back.channels.size() == bank.channels.size());
  for (std::size_t i = 0; i < bank.channels.size(); ++i) {
    const auto &a = bank.channels[i];
    const auto &b = back.channels[i];
    CHECK(a.center_hz == b.center_hz);
    CHECK(a.design_hz == b.design_hz);
    CHECK(a.q == b.q);
    CHECK(a.offset == b.offset);
    CHECK(a.scale == b.scale);
    for (int s = 0; s < 2; ++s) {
      CHECK(a.sos[s].b0 == b.sos[s].b0);
      CHECK(a.sos[s].b2 == b.sos[s].b2);
      CHECK(a.sos[s].a1 == b.sos[s].a1);
      CHECK(a.sos[s].a2 == b.sos[s].a2);
      CHECK(a.sos[s].csd_b0.has_value() == b.sos[s].csd_b0.has_value());
    }
  }
  CHECK(bank_text(back) == text);
  // Same features from the reloaded bank.
  const auto audio = data::prepare_utterance(data::WavData{16000, synth::utterance(11, 7)});
  const auto f1 = fex::extract_features(audio, bank);
  const auto f2 = fex::extract_features(audio, back);
  REQUIRE(f1.size() == f2.size());
  for (std::size_t t = 0; t < f1.size(); ++t) CHECK(f1[t].values == f2[t].values);
}

TEST_CASE("bank file rejects broken documents with the right category") {
  const auto text = bank_text(design::default_filter_bank());
  CHECK(category_of([&] { parse_bank(replace_line(text, "format", "something-else")); }) == ErrorCategory::format);
  CHECK(category_of([&] { parse_bank(replace_line(text, "version", "2")); }) == ErrorCategory::format);
  CHECK(category_of([&] { parse_bank(replace_line(text, "channel.3.sos1", "1 2 3")); }) == ErrorCategory::format);
  CHECK(category_of([&] { parse_bank(text + "unknown_key = 1\n"); }) == ErrorCategory::format);
  CHECK(category_of([&] { parse_bank(replace_line(text, "enable_mask", "0x0000")); }) == ErrorCategory::validation);
  CHECK(category_of([&] { parse_bank(replace_line(text, "n_channels", "17")); }) != ErrorCategory::usage);
  // a2 = 64/64 puts a pole on the unit circle.
  CHECK(category_of([&] { parse_bank(replace_line(text, "channel.5.sos0", "128 -128 -100 64")); }) ==
        ErrorCategory::validation);
  // Centers must increase.
  CHECK(category_of([&] { parse_bank(replace_line(text, "channel.2.center_hz", "50")); }) == ErrorCategory::validation);
  CHECK(category_of([&] { load_bank("/nonexistent/bank.txt"); }) == ErrorCategory::io);
}

TEST_CASE("normalization fields written by the trainer drive the FEx") {
  // Trainer-facing interface: per-channel offset/scale raw values in the bank file.
  auto bank = fex::select_channels(design::default_filter_bank(), 0x0010);  // channel 4 only
  const auto audio = data::prepare_utterance(data::WavData{16000, synth::utterance(11, 3)});
  const auto before = fex::extract_features(audio, bank);
  auto text = bank_text(bank);
  text = replace_line(text, "channel.4.offset", std::to_string(10 * 64));   // 10.0 in Q{12,6}
  text = replace_line(text, "channel.4.scale", std::to_string(2 * 256));    // 2.0 in Q{16,8}
  const auto dir = oracle::temp_dir("bank_norm");
  const std::string path = dir + "/bank.txt";
  {
    std::ofstream f(path);
    f << text;
  }
  const auto trained = load_bank(path);
  CHECK(trained.channels[4].offset.raw == 640);
  CHECK(trained.channels[4].scale.raw == 512);
  const auto after = fex::extract_features(audio, trained);
  REQUIRE(after.size() == before.size());
  // Independent recomputation: feature = clamp(scale * (log2 - offset)), so with
  // log2 = before / 5 + 8 the new value is 2 * (log2 - 10) wherever neither clamps.
  int compared = 0;
  for (std::size_t t = 0; t < after.size(); ++t) {
    const int old_v = before[t].values[0];
    if (old_v <= 0 || old_v >= kFeatureMax) continue;
    const double log2_q6 = old_v / 5.0 + 8 * 64;  // before: 5 * (v - 512)
    const double expect = std::clamp(2.0 * (log2_q6 - 640), 0.0, double(kFeatureMax));
    CHECK(std::abs(after[t].values[0] - expect) <= 1.0);
    ++compared;
  }
  CHECK(compared > 10);
  CHECK(category_of([&] { parse_bank(replace_line(text, "channel.4.offset", "5000")); }) ==
        ErrorCategory::validation);
}
