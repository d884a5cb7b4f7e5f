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

#pragma once

#include "dkws/fixed_point.hpp"

namespace dkws {

// Audio samples entering the feature extractor: 12-bit, full scale [-1, 1).
inline constexpr QFormat kSampleFormat{12, 11};

// Biquad outputs, delay registers and the envelope: full 32-bit accumulator.
inline constexpr QFormat kStateFormat{32, 20};

// log2 of the raw envelope: integer part in the upper bits, 6 fraction bits.
inline constexpr QFormat kLogFormat{12, 6};

// Per-channel normalization gain.
inline constexpr QFormat kScaleFormat{16, 8};

// Features: 12 magnitude bits, unsigned after normalization, value in [0, 1).
inline constexpr QFormat kFeatureFormat{13, 12};
inline constexpr int kFeatureMax = 4095;

// Recurrent activations (inputs, hidden state, gate outputs).
inline constexpr QFormat kActivationFormat{16, 14};
inline constexpr int kActivationOne = 1 << 14;

// Left shift that places a 12-bit feature on the activation grid.
inline constexpr int kFeatureToActivationShift = kActivationFormat.frac_bits() - kFeatureFormat.frac_bits();

}  // namespace dkws
