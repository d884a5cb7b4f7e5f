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
 * Binary weight file (little-endian):
 *   "DKWS" | u16 version=1 | u16 n_in | u16 n_hid | u16 n_out
 *   7 matrix records {u8 id, u16 rows, u16 cols, i8 scale_exp, rows*cols int8}
 *   4 bias records   {u8 id, u16 len, len * int32}
 *   u32 CRC-32 (zlib polynomial) of every preceding byte
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dkws/delta_gru.hpp"

namespace dkws {

inline constexpr std::uint16_t kWeightFileVersion = 1;

std::vector<std::uint8_t> encode_weights(const gru::NetworkWeights &w);

/// Rejects bad magic, version, truncation, trailing bytes, CRC mismatch,
/// missing/duplicate records and record shapes that disagree with the header
/// (dkws::Error(format)), then runs gru::validate_weights
/// (dkws::Error(validation)).
gru::NetworkWeights decode_weights(const std::vector<std::uint8_t> &bytes);

void save_weights(const std::string &path, const gru::NetworkWeights &w);
gru::NetworkWeights load_weights(const std::string &path);

std::uint32_t crc32(const std::uint8_t *data, std::size_t size);

/// Whole-file reader shared by the binary formats; dkws::Error(io) on failure.
std::vector<std::uint8_t> read_file_bytes(const std::string &path);
void write_file_bytes(const std::string &path, const std::vector<std::uint8_t> &bytes);

}  // namespace dkws
