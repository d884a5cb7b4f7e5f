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

#include "dkws/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dkws/dataset.hpp"
#include "dkws/error.hpp"

namespace fs = std::filesystem;

namespace dkws::synth {

namespace {

double unit(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double gaussish(std::mt19937_64 &rng) {
  // Irwin-Hall with 4 terms, rescaled to unit variance.
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += unit(rng);
  return (s - 2.0) * std::sqrt(3.0);
}

std::int16_t clip16(double v) { return static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L)); }

}  // namespace

std::vector<std::int16_t> noise(std::size_t n, std::uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed ^ 0x6e6f697365ull);
  std::vector<std::int16_t> out(n);
  for (auto &s : out) s = clip16(sigma * gaussish(rng));
  return out;
}

std::vector<std::int16_t> utterance(int label, std::uint64_t seed, int rate) {
  if (label < 0 || label >= data::kNumClasses) throw std::invalid_argument("synth::utterance: label outside 0..11");
  if (rate < 8000) throw std::invalid_argument("synth::utterance: rate below 8 kHz");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(label) + 1);
  const auto n = static_cast<std::size_t>(rate);
  std::vector<double> x(n);
  const double sigma = 20.0 + 40.0 * unit(rng);
  for (auto &v : x) v = sigma * gaussish(rng);

  if (label != data::kSilence) {
    const double f0 = (105.0 + 9.0 * label) * (0.95 + 0.1 * unit(rng));
    const double f1 = 330.0 + 55.0 * label;
    const double f2 = 950.0 + 230.0 * label;
    const double glide = 0.9 + 0.2 * unit(rng);
    const double start = (0.15 + 0.3 * unit(rng)) * rate;
    const double length = (0.3 + 0.15 * unit(rng)) * rate;
    const double peak = 6000.0 + 8000.0 * unit(rng);
    const int harmonics = static_cast<int>(3800.0 / f0);
    std::vector<double> amp(harmonics + 1);
    double norm = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      const double f = k * f0;
      amp[k] = std::exp(-std::pow((f - f1) / 160.0, 2)) + 0.7 * std::exp(-std::pow((f - f2) / 260.0, 2)) + 0.02;
      norm += amp[k];
    }
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (static_cast<double>(i) - start) / length;
      if (t < 0.0 || t >= 1.0) continue;
      const double env = std::pow(std::sin(std::numbers::pi * t), 2);
      phase += 2.0 * std::numbers::pi * f0 * (1.0 + (glide - 1.0) * t) / rate;
      double v = 0.0;
      for (int k = 1; k <= harmonics; ++k) v += amp[k] * std::sin(k * phase);
      x[i] += peak * env * v / norm;
    }
  }
  std::vector<std::int16_t> out(n);
  std::transform(x.begin(), x.end(), out.begin(), clip16);
  return out;
}

TreeSummary write_synthetic_gscd(const std::string &root_str, const TreeOptions &options) {
  const fs::path root(root_str);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCategory::io, fmt::format("cannot create '{}': {}", root_str, ec.message()));
  TreeSummary summary;
  std::ofstream val_list(root / "validation_list.txt");
  std::ofstream test_list(root / "testing_list.txt");
  if (!val_list || !test_list) throw Error(ErrorCategory::io, "cannot write split lists");

  std::vector<std::pair<std::string, int>> words;
  for (int c = 2; c < data::kNumClasses; ++c) {
    std::string w(data::kLabelNames[c]);
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    words.emplace_back(w, c);
  }
  for (const auto &w : options.unknown_words) words.emplace_back(w, data::kUnknown);

  std::mt19937_64 rng(options.seed ^ 0x7472656531ull);
  const int per_word = options.train_per_word + options.val_per_word + options.test_per_word;
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const auto &[word, label] = words[wi];
    fs::create_directories(root / word);
    for (int k = 0; k < per_word; ++k) {
      const std::string rel = fmt::format("{}/{:08x}_nohash_{}.wav", word, static_cast<std::uint32_t>(rng()), k);
      // Unknown words get a per-word seed offset so they differ from keywords.
      const auto samples = utterance(label, options.seed * 1000003ull + wi * 1009ull + static_cast<std::uint64_t>(k));
      data::save_wav((root / rel).string(), 16000, samples);
      ++summary.files;
      if (k >= options.train_per_word && k < options.train_per_word + options.val_per_word) {
        fmt::print(val_list, "{}\n", rel);
        ++summary.val_listed;
      } else if (k >= options.train_per_word + options.val_per_word) {
        fmt::print(test_list, "{}\n", rel);
        ++summary.test_listed;
      }
    }
  }
  fs::create_directories(root / "_background_noise_");
  for (int i = 0; i < options.noise_clips; ++i) {
    const auto n = static_cast<std::size_t>(options.noise_seconds * 16000);
    const auto clip = noise(n, options.seed + 77 + static_cast<std::uint64_t>(i), 300.0 + 200.0 * i);
    data::save_wav((root / "_background_noise_" / fmt::format("noise_{}.wav", i)).string(), 16000, clip);
  }
  return summary;
}

}  // namespace dkws::synth
