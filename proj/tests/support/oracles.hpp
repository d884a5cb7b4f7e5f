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
 * Independent oracles for the unit tests. Nothing here calls the code under
 * test except where noted (the GRU oracle shares the published nonlinearity
 * tables, which are part of the numeric contract).
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dkws/delta_gru.hpp"
#include "dkws/filter_design.hpp"

namespace oracle {

/// Round-half-to-even of v / 2^shift, written with plain division.
std::int64_t rne_div_pow2(std::int64_t v, int shift);

/// Integer dense GRU step re-derived from the header's numeric contract.
std::vector<std::int32_t> gru_step(const std::vector<std::int32_t> &x, const std::vector<std::int32_t> &h,
                                   const dkws::gru::NetworkWeights &w);
std::vector<std::int32_t> fc(const std::vector<std::int32_t> &h, const dkws::gru::NetworkWeights &w);

/// Real-valued GRU with exact sigmoid/tanh (weights dequantized). Inputs and
/// state are real numbers (raw activation / 2^14).
std::vector<double> gru_step_real(const std::vector<double> &x, const std::vector<double> &h,
                                  const dkws::gru::NetworkWeights &w);

/// Bit-serial reflected CRC-32 (polynomial 0xEDB88320).
std::uint32_t crc32_bitwise(const std::uint8_t *data, std::size_t size);

/// Direct-form-I biquad in double precision.
struct FloatBiquad {
  dkws::design::SOSCoefficients c;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  double step(double x);
};

/// |H(e^jw)| of a cascade evaluated from the raw polynomial coefficients.
double magnitude(const std::vector<dkws::design::SOSCoefficients> &sections, double freq_hz, double fs);

/// Canonical 16-bit mono PCM WAV bytes, optionally with an extra chunk
/// (id, payload) placed before "data".
std::vector<std::uint8_t> wav_bytes(int rate, const std::vector<std::int16_t> &samples,
                                    const std::string &extra_id = "", const std::vector<std::uint8_t> &extra = {});

std::string temp_dir(const std::string &tag);

}  // namespace oracle
