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
 * Deterministic synthetic speech-like material for tests, acceptance runs and
 * demos: label-dependent voiced "words" over low-level noise, and a miniature
 * Speech-Commands-style directory tree with list files and background noise.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dkws::synth {

/// One second at `rate` Hz of 16-bit audio for class `label` (0..11). Silence
/// is noise only; other classes add a voiced segment whose pitch and formants
/// depend on the label. Same (label, seed, rate) gives the same samples.
std::vector<std::int16_t> utterance(int label, std::uint64_t seed, int rate = 16000);

/// Approximately Gaussian noise, standard deviation `sigma` (16-bit units).
std::vector<std::int16_t> noise(std::size_t n, std::uint64_t seed, double sigma);

struct TreeOptions {
  int train_per_word = 4;
  int val_per_word = 1;
  int test_per_word = 1;
  std::vector<std::string> unknown_words{"bed", "cat", "happy"};
  int noise_clips = 2;
  double noise_seconds = 3.0;
  std::uint64_t seed = 0;
};

struct TreeSummary {
  int files = 0;
  int val_listed = 0;
  int test_listed = 0;
};

/// Writes <root>/<word>/*.wav at 16 kHz for the 10 keywords and the unknown
/// words, <root>/_background_noise_/*.wav, validation_list.txt and
/// testing_list.txt. Existing files are overwritten.
TreeSummary write_synthetic_gscd(const std::string &root, const TreeOptions &options = {});

}  // namespace dkws::synth
