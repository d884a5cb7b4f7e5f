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

#include "dkws/weights_io.hpp"

#include <array>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <zlib.h>

#include "dkws/byte_io.hpp"
#include "dkws/error.hpp"

namespace dkws {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'K', 'W', 'S'};

constexpr std::array<gru::MatrixId, 7> kMatrixIds{gru::MatrixId::W_xr, gru::MatrixId::W_xu, gru::MatrixId::W_xc,
                                                  gru::MatrixId::W_hr, gru::MatrixId::W_hu, gru::MatrixId::W_hc,
                                                  gru::MatrixId::W_fc};
constexpr std::array<gru::BiasId, 4> kBiasIds{gru::BiasId::b_r, gru::BiasId::b_u, gru::BiasId::b_c, gru::BiasId::b_fc};

[[noreturn]] void bad(const std::string &what) { throw Error(ErrorCategory::format, "weight file: " + what); }

}  // namespace

std::uint32_t crc32(const std::uint8_t *data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_weights(const gru::NetworkWeights &w) {
  gru::validate_weights(w);
  ByteWriter out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u16(kWeightFileVersion);
  out.u16(static_cast<std::uint16_t>(w.dims.n_in));
  out.u16(static_cast<std::uint16_t>(w.dims.n_hid));
  out.u16(static_cast<std::uint16_t>(w.dims.n_out));
  for (auto id : kMatrixIds) {
    const auto &m = w.matrix(id);
    out.u8(static_cast<std::uint8_t>(id));
    out.u16(static_cast<std::uint16_t>(m.rows));
    out.u16(static_cast<std::uint16_t>(m.cols));
    out.i8(static_cast<std::int8_t>(m.scale_exp));
    for (auto v : m.data) out.i8(v);
  }
  for (auto id : kBiasIds) {
    const auto &b = w.bias(id);
    out.u8(static_cast<std::uint8_t>(id));
    out.u16(static_cast<std::uint16_t>(b.size()));
    for (auto v : b) out.i32(v);
  }
  const std::uint32_t crc = crc32(out.bytes().data(), out.bytes().size());
  out.u32(crc);
  return out.take();
}

gru::NetworkWeights decode_weights(const std::vector<std::uint8_t> &bytes) {
  if (bytes.size() < 4 + 2 + 6 + 4) bad("file too short");
  const std::size_t body = bytes.size() - 4;
  ByteReader tail(bytes.data() + body, 4);
  const std::uint32_t stored = tail.u32();
  const std::uint32_t actual = crc32(bytes.data(), body);
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i])) bad("bad magic (expected \"DKWS\")");
  }
  if (stored != actual) bad(fmt::format("CRC mismatch (stored {:08x}, computed {:08x})", stored, actual));

  ByteReader in(bytes.data(), body);
  in.skip(kMagic.size());
  const auto version = in.u16();
  if (version != kWeightFileVersion) bad(fmt::format("unsupported version {}", version));
  gru::NetworkWeights w;
  w.dims.n_in = in.u16();
  w.dims.n_hid = in.u16();
  w.dims.n_out = in.u16();
  if (w.dims.n_in < 1 || w.dims.n_in > gru::kMaxInputs || w.dims.n_hid < 1 || w.dims.n_hid > gru::kMaxHidden ||
      w.dims.n_out < 1 || w.dims.n_out > gru::kMaxOutputs) {
    bad(fmt::format("dimensions {}/{}/{} out of range", w.dims.n_in, w.dims.n_hid, w.dims.n_out));
  }

  std::array<bool, 7> seen_m{};
  std::array<bool, 4> seen_b{};
  while (!in.done()) {
    const std::uint8_t id = in.u8();
    if (id <= static_cast<std::uint8_t>(gru::MatrixId::W_fc)) {
      if (seen_m[id]) bad(fmt::format("duplicate matrix record {}", id));
      seen_m[id] = true;
      auto &m = w.matrix(static_cast<gru::MatrixId>(id));
      m.rows = in.u16();
      m.cols = in.u16();
      m.scale_exp = in.i8();
      const bool is_fc = id == static_cast<std::uint8_t>(gru::MatrixId::W_fc);
      const int want_rows = is_fc ? w.dims.n_out : w.dims.n_hid;
      const int want_cols = is_fc ? w.dims.n_hid : (id < 3 ? w.dims.n_in : w.dims.n_hid);
      if (m.rows != want_rows || m.cols != want_cols) {
        bad(fmt::format("matrix {} is {}x{}, header implies {}x{}", id, m.rows, m.cols, want_rows, want_cols));
      }
      m.data.resize(static_cast<std::size_t>(m.rows) * m.cols);
      for (auto &v : m.data) v = in.i8();
    } else if (id >= static_cast<std::uint8_t>(gru::BiasId::b_r) && id <= static_cast<std::uint8_t>(gru::BiasId::b_fc)) {
      const int k = id - static_cast<int>(gru::BiasId::b_r);
      if (seen_b[k]) bad(fmt::format("duplicate bias record {}", id));
      seen_b[k] = true;
      auto &b = w.bias(static_cast<gru::BiasId>(id));
      const int len = in.u16();
      const int want = id == static_cast<std::uint8_t>(gru::BiasId::b_fc) ? w.dims.n_out : w.dims.n_hid;
      if (len != want) bad(fmt::format("bias {} has {} entries, header implies {}", id, len, want));
      b.resize(len);
      for (auto &v : b) v = in.i32();
    } else {
      bad(fmt::format("unknown record id {}", id));
    }
  }
  for (std::size_t i = 0; i < seen_m.size(); ++i) {
    if (!seen_m[i]) bad(fmt::format("missing matrix record {}", i));
  }
  for (std::size_t i = 0; i < seen_b.size(); ++i) {
    if (!seen_b[i]) bad(fmt::format("missing bias record {}", i + 16));
  }
  gru::validate_weights(w);
  return w;
}

std::vector<std::uint8_t> read_file_bytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, fmt::format("cannot open '{}'", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string &path, const std::vector<std::uint8_t> &bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, fmt::format("cannot write '{}'", path));
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCategory::io, fmt::format("write to '{}' failed", path));
}

void save_weights(const std::string &path, const gru::NetworkWeights &w) { write_file_bytes(path, encode_weights(w)); }

gru::NetworkWeights load_weights(const std::string &path) {
  try {
    return decode_weights(read_file_bytes(path));
  } catch (const Error &e) {
    if (e.category() == ErrorCategory::io) throw;
    throw Error(e.category(), fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace dkws
