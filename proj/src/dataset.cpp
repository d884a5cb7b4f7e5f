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

#include "dkws/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "dkws/byte_io.hpp"
#include "dkws/error.hpp"
#include "dkws/fixed_point.hpp"
#include "dkws/weights_io.hpp"

namespace fs = std::filesystem;

namespace dkws::data {

namespace {

[[noreturn]] void bad_wav(const std::string &what) { throw Error(ErrorCategory::format, "WAV: " + what); }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

constexpr std::string_view kNoiseDir = "_background_noise_";

// Portable Fisher-Yates on the raw engine output (std::shuffle is not
// specified bit-for-bit across standard libraries).
template <typename T>
void seeded_shuffle(std::vector<T> &v, std::mt19937_64 &rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::set<std::string> read_list(const fs::path &file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCategory::io, fmt::format("missing split list '{}'", file.string()));
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

}  // namespace

// --- WAV -----------------------------------------------------------------------------

WavData parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes.data(), bytes.size());
  try {
    if (in.str(4) != "RIFF") bad_wav("missing RIFF tag");
    const std::uint32_t riff_size = in.u32();
    if (in.str(4) != "WAVE") bad_wav("missing WAVE tag");
    if (riff_size < 4 || riff_size > bytes.size() - 8) bad_wav("truncated file: RIFF size exceeds the data present");
    const std::size_t riff_end = 8 + static_cast<std::size_t>(riff_size);

    bool have_fmt = false;
    WavData out;
    while (in.position() + 8 <= riff_end) {
      const std::string id = in.str(4);
      const std::uint32_t size = in.u32();
      if (size > riff_end - in.position()) bad_wav(fmt::format("chunk '{}' truncated", id));
      if (id == "fmt ") {
        if (size < 16) bad_wav("fmt chunk too short");
        const std::uint16_t format = in.u16();
        const std::uint16_t channels = in.u16();
        const std::uint32_t rate = in.u32();
        const std::uint32_t byte_rate = in.u32();
        const std::uint16_t block_align = in.u16();
        const std::uint16_t bits = in.u16();
        in.skip(size - 16);
        if (format != 1) bad_wav(fmt::format("unsupported format code {} (PCM 1 required)", format));
        if (channels != 1) bad_wav(fmt::format("{} channels (mono required)", channels));
        if (bits != 16) bad_wav(fmt::format("{} bits per sample (16 required)", bits));
        if (rate == 0 || rate > 1'000'000) bad_wav(fmt::format("implausible sample rate {}", rate));
        if (block_align != 2 || byte_rate != rate * 2) bad_wav("inconsistent byte rate / block align");
        out.sample_rate = static_cast<int>(rate);
        have_fmt = true;
      } else if (id == "data") {
        if (!have_fmt) bad_wav("data chunk before fmt chunk");
        if (size % 2 != 0) bad_wav("odd data chunk size");
        out.samples.resize(size / 2);
        for (auto &s : out.samples) s = in.i16();
        return out;
      } else {
        in.skip(size);
      }
      if (size % 2 == 1 && in.position() < riff_end) in.skip(1);  // pad byte
    }
    bad_wav(have_fmt ? "no data chunk" : "no fmt chunk");
  } catch (const Error &e) {
    if (std::string_view(e.what()).rfind("WAV:", 0) == 0) throw;
    bad_wav(fmt::format("truncated file ({})", e.what()));
  }
}

std::vector<std::uint8_t> encode_wav(int sample_rate, std::span<const std::int16_t> samples) {
  if (sample_rate <= 0) throw std::invalid_argument("encode_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  ByteWriter out;
  out.raw("RIFF");
  out.u32(36 + data_bytes);
  out.raw("WAVE");
  out.raw("fmt ");
  out.u32(16);
  out.u16(1);
  out.u16(1);
  out.u32(static_cast<std::uint32_t>(sample_rate));
  out.u32(static_cast<std::uint32_t>(sample_rate) * 2);
  out.u16(2);
  out.u16(16);
  out.raw("data");
  out.u32(data_bytes);
  for (auto s : samples) out.i16(s);
  return out.take();
}

WavData load_wav(const std::string &path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_wav(bytes);
  } catch (const Error &e) {
    throw Error(e.category(), fmt::format("{}: {}", path, e.what()));
  }
}

void save_wav(const std::string &path, int sample_rate, std::span<const std::int16_t> samples) {
  write_file_bytes(path, encode_wav(sample_rate, samples));
}

// --- signal preparation -----------------------------------------------------------------

const std::array<std::int16_t, kResamplerTaps> &resampler_taps() {
  static const auto taps = [] {
    constexpr int mid = kResamplerTaps / 2;
    constexpr double cutoff = 0.25;  // cycles/sample at 16 kHz = 4 kHz
    std::array<std::int16_t, kResamplerTaps> t{};
    std::int32_t sum = 0;
    for (int n = 0; n < kResamplerTaps; ++n) {
      const int k = n - mid;
      const double sinc = k == 0 ? 2.0 * cutoff
                                 : std::sin(2.0 * std::numbers::pi * cutoff * k) / (std::numbers::pi * k);
      const double hamming = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (kResamplerTaps - 1));
      t[n] = static_cast<std::int16_t>(std::lround(std::ldexp(sinc * hamming, kResamplerFracBits)));
      sum += t[n];
    }
    // Unity DC gain exactly: the center tap absorbs the rounding residue.
    t[mid] = static_cast<std::int16_t>(t[mid] + ((1 << kResamplerFracBits) - sum));
    return t;
  }();
  return taps;
}

std::vector<std::int16_t> resample_16k_to_8k(std::span<const std::int16_t> samples) {
  const auto &h = resampler_taps();
  constexpr int mid = kResamplerTaps / 2;
  const auto n = static_cast<std::int64_t>(samples.size());
  std::vector<std::int16_t> out(static_cast<std::size_t>((n + 1) / 2));
  for (std::int64_t m = 0; m < static_cast<std::int64_t>(out.size()); ++m) {
    std::int64_t acc = 0;
    for (int k = 0; k < kResamplerTaps; ++k) {
      const std::int64_t i = 2 * m + mid - k;
      if (i >= 0 && i < n) acc += std::int64_t{h[k]} * samples[i];
    }
    const std::int64_t y = round_shift_right(acc, kResamplerFracBits, Rounding::nearest_even);
    out[m] = static_cast<std::int16_t>(std::clamp<std::int64_t>(y, INT16_MIN, INT16_MAX));
  }
  return out;
}

std::vector<std::int16_t> quantize_12b(std::span<const std::int16_t> samples) {
  std::vector<std::int16_t> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::int64_t v = round_shift_right(samples[i], 4, Rounding::nearest_even);
    out[i] = static_cast<std::int16_t>(std::clamp<std::int64_t>(v, -2048, 2047));
  }
  return out;
}

std::vector<std::int16_t> fit_length(std::span<const std::int16_t> samples, std::size_t n) {
  std::vector<std::int16_t> out(n, 0);
  std::copy_n(samples.begin(), std::min(n, samples.size()), out.begin());
  return out;
}

std::vector<std::int16_t> prepare_utterance(const WavData &wav) {
  if (wav.sample_rate == 16000) return fit_length(quantize_12b(resample_16k_to_8k(wav.samples)));
  if (wav.sample_rate == kTargetRate) return fit_length(quantize_12b(wav.samples));
  throw Error(ErrorCategory::validation, fmt::format("unsupported sample rate {} Hz (8000 or 16000)", wav.sample_rate));
}

// --- labels -------------------------------------------------------------------------------

int label_id(std::string_view name) {
  const std::string l = lower(name);
  for (int i = 0; i < kNumClasses; ++i) {
    if (lower(kLabelNames[i]) == l) return i;
  }
  return -1;
}

std::string_view label_name(int id) {
  if (id < 0 || id >= kNumClasses) throw std::invalid_argument(fmt::format("label id {} outside 0..11", id));
  return kLabelNames[id];
}

int word_label(std::string_view word) {
  const int id = label_id(word);
  return id >= 2 ? id : kUnknown;
}

int to_11_class(int label12) {
  if (label12 < 0 || label12 >= kNumClasses) throw std::invalid_argument("label outside 0..11");
  if (label12 == kUnknown) return -1;
  return label12 == kSilence ? 0 : label12 - 1;
}

// --- splits --------------------------------------------------------------------------------

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

const std::vector<UtteranceRef> &SplitPlan::get(Split s) const {
  return s == Split::train ? train : (s == Split::val ? val : test);
}

std::vector<UtteranceRef> &SplitPlan::get(Split s) {
  return const_cast<std::vector<UtteranceRef> &>(static_cast<const SplitPlan &>(*this).get(s));
}

SplitPlan plan_splits(const std::string &root_str, const DatasetOptions &options) {
  const fs::path root(root_str);
  if (!fs::is_directory(root)) throw Error(ErrorCategory::io, fmt::format("dataset root '{}' not found", root_str));
  if (!(options.silence_fraction >= 0.0 && options.silence_fraction < 1.0)) {
    throw std::invalid_argument("silence_fraction must be in [0, 1)");
  }
  const auto val_list = read_list(root / "validation_list.txt");
  const auto test_list = read_list(root / "testing_list.txt");
  for (const auto &p : val_list) {
    if (test_list.count(p) != 0) {
      throw Error(ErrorCategory::validation, fmt::format("'{}' is listed for both validation and testing", p));
    }
  }

  std::vector<std::string> words;
  for (const auto &entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && !name.empty() && name[0] != '_' && name[0] != '.') words.push_back(name);
  }
  std::sort(words.begin(), words.end());

  SplitPlan plan;
  for (const auto &word : words) {
    std::vector<std::string> files;
    for (const auto &entry : fs::directory_iterator(root / word)) {
      if (entry.is_regular_file() && entry.path().extension() == ".wav") {
        files.push_back(word + "/" + entry.path().filename().string());
      }
    }
    std::sort(files.begin(), files.end());
    for (auto &rel : files) {
      UtteranceRef ref;
      ref.split = test_list.count(rel) != 0 ? Split::test : (val_list.count(rel) != 0 ? Split::val : Split::train);
      if (ref.split == Split::train && !options.include_train) continue;
      ref.label = word_label(word);
      ref.word = word;
      ref.path = std::move(rel);
      plan.get(ref.split).push_back(std::move(ref));
    }
  }

  // Background clips for Silence, in a fixed order with their lengths.
  std::vector<std::pair<std::string, std::int64_t>> noise;
  if (fs::is_directory(root / kNoiseDir)) {
    for (const auto &entry : fs::directory_iterator(root / kNoiseDir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".wav") {
        noise.emplace_back(std::string(kNoiseDir) + "/" + entry.path().filename().string(), 0);
      }
    }
  }
  std::sort(noise.begin(), noise.end());
  std::vector<int> noise_rate(noise.size());
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const auto wav = load_wav((root / noise[i].first).string());
    noise[i].second = static_cast<std::int64_t>(wav.samples.size());
    noise_rate[i] = wav.sample_rate;
  }

  for (Split s : {Split::train, Split::val, Split::test}) {
    if (s == Split::train && !options.include_train) continue;
    auto &refs = plan.get(s);
    std::mt19937_64 rng(options.seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(s) + 1)));

    // Unknown down-sampling to the mean keyword count (train/val only: the
    // test split keeps the official list intact).
    if (options.balance_unknown && s != Split::test) {
      std::map<int, int> counts;
      for (const auto &r : refs) ++counts[r.label];
      int keyword_total = 0;
      for (int c = 2; c < kNumClasses; ++c) keyword_total += counts[c];
      const auto keep = static_cast<std::size_t>(std::lround(keyword_total / 10.0));
      std::vector<UtteranceRef> unknown, rest;
      for (auto &r : refs) (r.label == kUnknown ? unknown : rest).push_back(std::move(r));
      if (unknown.size() > keep) {
        seeded_shuffle(unknown, rng);
        unknown.resize(keep);
      }
      refs = std::move(rest);
      refs.insert(refs.end(), unknown.begin(), unknown.end());
      std::sort(refs.begin(), refs.end(), [](const auto &a, const auto &b) { return a.path < b.path; });
    }

    // Silence as a fixed fraction of the final split.
    const auto n_silence = static_cast<std::size_t>(
        std::lround(options.silence_fraction / (1.0 - options.silence_fraction) * static_cast<double>(refs.size())));
    if (n_silence > 0 && noise.empty()) {
      throw Error(ErrorCategory::validation, "no background-noise clips for the Silence class");
    }
    for (std::size_t k = 0; k < n_silence; ++k) {
      const std::size_t f = static_cast<std::size_t>(rng() % noise.size());
      const std::int64_t span = noise[f].second - noise_rate[f];
      UtteranceRef ref;
      ref.path = noise[f].first;
      ref.label = kSilence;
      ref.word = "_silence_";
      ref.split = s;
      ref.noise_offset = span > 0 ? static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span + 1)) : 0;
      refs.push_back(std::move(ref));
    }

    std::vector<int> per_class(kNumClasses, 0);
    for (const auto &r : refs) ++per_class[r.label];
    std::vector<std::string> empty;
    for (int c = 0; c < kNumClasses; ++c) {
      if (per_class[c] == 0) empty.emplace_back(kLabelNames[c]);
    }
    if (!empty.empty()) {
      throw Error(ErrorCategory::validation,
                  fmt::format("{} split has no utterances for: {}", split_name(s), fmt::join(empty, ", ")));
    }
  }
  return plan;
}

Utterance load_utterance(const std::string &root, const UtteranceRef &ref) {
  Utterance u;
  u.label = ref.label;
  u.word = ref.word;
  u.split = ref.split;
  const std::string path = (fs::path(root) / ref.path).string();
  WavData wav = load_wav(path);
  if (ref.noise_offset >= 0) {
    const auto begin = std::min<std::int64_t>(ref.noise_offset, static_cast<std::int64_t>(wav.samples.size()));
    const auto end = std::min<std::int64_t>(begin + wav.sample_rate, static_cast<std::int64_t>(wav.samples.size()));
    wav.samples = std::vector<std::int16_t>(wav.samples.begin() + begin, wav.samples.begin() + end);
    u.source = fmt::format("{}@{}", ref.path, ref.noise_offset);
  } else {
    u.source = ref.path;
  }
  u.samples = prepare_utterance(wav);
  return u;
}

std::vector<Utterance> load_split(const std::string &root, const std::vector<UtteranceRef> &refs, int workers) {
  std::vector<Utterance> out(refs.size());
  const std::size_t n_tasks = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), refs.size());
  std::vector<std::future<void>> tasks;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    tasks.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < refs.size(); i += n_tasks) out[i] = load_utterance(root, refs[i]);
    }));
  }
  for (auto &f : tasks) f.get();
  return out;
}

std::uint64_t content_hash(std::span<const std::int16_t> samples) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto s : samples) {
    const auto u = static_cast<std::uint16_t>(s);
    for (int b = 0; b < 2; ++b) {
      h ^= (u >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::vector<std::string> find_leaks(const std::vector<Utterance> &a, const std::vector<Utterance> &b) {
  std::unordered_map<std::uint64_t, const Utterance *> seen;
  for (const auto &u : a) seen.emplace(content_hash(u.samples), &u);
  std::vector<std::string> leaks;
  for (const auto &u : b) {
    const auto it = seen.find(content_hash(u.samples));
    if (it != seen.end()) {
      leaks.push_back(fmt::format("{} ({}) duplicates {} ({})", u.source, split_name(u.split), it->second->source,
                                  split_name(it->second->split)));
    }
  }
  return leaks;
}

// --- cache ----------------------------------------------------------------------------------

std::vector<std::uint8_t> encode_cache(std::span<const CachedUtterance> items) {
  ByteWriter out;
  out.raw("DKWC");
  out.u16(kCacheVersion);
  out.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto &item : items) {
    if (item.label < 0 || item.label >= kNumClasses) throw std::invalid_argument("cache: label outside 0..11");
    if (item.samples.size() != static_cast<std::size_t>(kUtteranceSamples)) {
      throw std::invalid_argument("cache: utterances must have exactly 8000 samples");
    }
    for (auto v : item.samples) {
      if (v < -2048 || v > 2047) throw std::invalid_argument("cache: sample outside the 12-bit range");
    }
    out.u8(static_cast<std::uint8_t>(item.label));
    for (auto s : item.samples) out.i16(s);
  }
  return out.take();
}

std::vector<CachedUtterance> decode_cache(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes.data(), bytes.size());
  const auto fail = [](const std::string &what) -> void { throw Error(ErrorCategory::format, "cache: " + what); };
  if (bytes.size() < 10) fail("file too short");
  if (in.str(4) != "DKWC") fail("bad magic (expected \"DKWC\")");
  const auto version = in.u16();
  if (version != kCacheVersion) fail(fmt::format("unsupported version {}", version));
  const std::uint32_t count = in.u32();
  constexpr std::size_t record = 1 + 2 * kUtteranceSamples;
  if (in.remaining() != static_cast<std::size_t>(count) * record) {
    fail(fmt::format("{} bytes of records for {} utterances", in.remaining(), count));
  }
  std::vector<CachedUtterance> out(count);
  for (auto &item : out) {
    item.label = in.u8();
    if (item.label >= kNumClasses) fail(fmt::format("label {} outside 0..11", item.label));
    item.samples.resize(kUtteranceSamples);
    for (auto &s : item.samples) {
      s = in.i16();
      if (s < -2048 || s > 2047) fail("sample outside the 12-bit range");
    }
  }
  return out;
}

void save_cache(const std::string &path, std::span<const CachedUtterance> items) {
  write_file_bytes(path, encode_cache(items));
}

std::vector<CachedUtterance> load_cache(const std::string &path) {
  try {
    return decode_cache(read_file_bytes(path));
  } catch (const Error &e) {
    if (e.category() == ErrorCategory::io) throw;
    throw Error(e.category(), fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace dkws::data
