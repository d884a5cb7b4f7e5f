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
 * Mel-spaced band-pass filter bank: floating-point prototype design,
 * mixed-precision coefficient quantization, stability checks and the
 * shift-add structure analysis used for multiplier accounting.
 *
 * Every channel is a 4th-order Butterworth band-pass realized as two biquads
 * whose numerators are b0 * (1 - z^-2). In the quantized bank the first
 * section's b0 is one power of two shared by all channels, so it is a wired
 * shift; the second section carries the per-channel gain.
 */

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dkws/fixed_point.hpp"

namespace dkws::design {

struct SOSCoefficients {
  double b0 = 1.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
};

struct QuantizedSOS {
  FixedValue b0;
  FixedValue b2;
  FixedValue a1;
  FixedValue a2;
  int frac_b = 0;
  int frac_a = 0;
  // Present only for coefficients with one or two nonzero signed digits.
  std::optional<std::vector<CsdTerm>> csd_b0;
  std::optional<std::vector<CsdTerm>> csd_a1;
  std::optional<std::vector<CsdTerm>> csd_a2;

  SOSCoefficients dequantized() const;
};

/// Builds a QuantizedSOS from raw integers and fills in the CSD lists.
QuantizedSOS make_quantized_sos(std::int64_t b0, std::int64_t b2, std::int64_t a1, std::int64_t a2,
                                QFormat b_fmt, QFormat a_fmt);

struct BankChannel {
  double center_hz = 0.0;  // nominal Mel center
  double design_hz = 0.0;  // center actually designed (clamped below Nyquist)
  double q = 1.0;
  std::array<QuantizedSOS, 2> sos;
  FixedValue offset;  // log domain, kLogFormat
  FixedValue scale;   // kScaleFormat
  bool enabled = true;
};

struct FilterBank {
  int sample_rate_hz = 8000;
  int b_bits = 12;
  int a_bits = 8;
  int frac_b = 0;
  int frac_a = 0;
  int env_shift = 5;  // envelope smoother constant alpha (shift), used by the FEx
  std::vector<BankChannel> channels;

  int enabled_count() const;
  std::vector<int> enabled_indices() const;
  std::uint32_t enable_mask() const;
};

struct PrototypeChannel {
  double center_hz = 0.0;
  double design_hz = 0.0;
  double q = 1.0;
  std::array<SOSCoefficients, 2> sos;
};

struct PrototypeBank {
  int sample_rate_hz = 8000;
  std::vector<PrototypeChannel> channels;
};

inline constexpr int kMaxChannels = 16;
inline constexpr double kDefaultLowHz = 100.0;
inline constexpr double kDefaultHighHz = 7900.0;
inline constexpr double kMaxCenterFraction = 0.45;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n centers equally spaced in Mel between f_lo and f_hi, endpoints included.
std::vector<double> mel_center_frequencies(int n, double f_lo_hz, double f_hi_hz);

/// Start index of the `width`-channel contiguous window whose end centers are
/// closest (worst-case log ratio) to [lo_hz, hi_hz].
int best_channel_window(std::span<const double> centers, int width, double lo_hz, double hi_hz);

/// The designated speech window: kSpeechWindowChannels contiguous channels
/// whose end centers best match 516 Hz and 4.22 kHz.
inline constexpr int kSpeechWindowChannels = 10;
inline constexpr double kSpeechWindowLowHz = 516.0;
inline constexpr double kSpeechWindowHighHz = 4220.0;
/// Enable mask of that window over the bank's nominal centers. Throws
/// std::invalid_argument if the bank has fewer channels than the window.
std::uint32_t speech_window_mask(const FilterBank &bank);

/// Center actually designed at this sample rate: min(center, 0.45 fs).
double clamp_design_center(double center_hz, int sample_rate_hz);

/// 4th-order Butterworth band-pass via bilinear transform with the center
/// pre-warped. Unit gain at the (clamped) center, split evenly between the
/// two sections.
std::array<SOSCoefficients, 2> design_bandpass(double center_hz, double q_factor, int sample_rate_hz);

std::complex<double> frequency_response(std::span<const SOSCoefficients> sections, double freq_hz,
                                        int sample_rate_hz);
std::complex<double> frequency_response(std::span<const QuantizedSOS> sections, double freq_hz,
                                        int sample_rate_hz);

/// Frequency of maximum |H| for a cascade, searched on [lo, hi].
double peak_frequency(std::span<const SOSCoefficients> sections, int sample_rate_hz, double lo_hz,
                      double hi_hz);

bool stability_check(const SOSCoefficients &sos);
bool stability_check(const QuantizedSOS &sos);

/// Integer bits (sign included) needed so that |v| < 2^(int_bits - 1).
int integer_bits_for(double max_abs);

/// Round-to-nearest quantization of one section with explicit formats.
/// Throws dkws::Error(numeric) if the quantized section is unstable.
QuantizedSOS quantize_coefficients(const SOSCoefficients &sos, QFormat b_fmt, QFormat a_fmt);

/// Same, with formats derived from this section's own coefficient maxima.
QuantizedSOS quantize_coefficients(const SOSCoefficients &sos, int b_bits, int a_bits);

/// Mel-spaced prototype bank. Each channel's -3 dB edges sit at the Mel
/// midpoints to its neighbours.
PrototypeBank design_prototype_bank(int n_channels = kMaxChannels, double f_lo_hz = kDefaultLowHz,
                                    double f_hi_hz = kDefaultHighHz, int sample_rate_hz = 8000);

enum class CoefficientFit {
  round_nearest,  // plain rounding of the feedback coefficients
  refine_peak,    // rounding, then a +/-2 LSB search that pulls the peak back to the center
};

/// Quantizes a whole prototype bank with shared per-family fraction bits.
/// The per-channel gain is recomputed against the quantized poles so the
/// center gain stays at 0 dB. Throws dkws::Error(numeric) naming the channel
/// if a section ends up unstable.
FilterBank quantize_bank(const PrototypeBank &proto, int b_bits, int a_bits,
                         CoefficientFit fit = CoefficientFit::refine_peak);

/// Prototype + quantization at the default 12b/8b operating point.
FilterBank default_filter_bank(int sample_rate_hz = 8000);

/// Log-domain offset and linear scale applied before a feature leaves the FEx.
FixedValue default_offset();
FixedValue default_scale();

// --- structure analysis ------------------------------------------------------

enum class SlotKind {
  multiplier,  // general multiplier in the shared datapath
  shift,       // same CSD constant for every channel: wired shifts (plus one adder for two digits)
  shared,      // b2 == -b0 everywhere: reuses the b0 product, subtract instead of add
  absent,      // identically zero (b1)
};

struct SectionStructure {
  std::array<SlotKind, 5> slots{};  // b0, b1, b2, a1, a2
};

struct FilterStructure {
  std::array<SectionStructure, 2> sections;
  int multipliers = 0;
  int shifts = 0;
  int adders = 0;
};

/// Direct-form count for one 4th-order filter: 5 coefficients and 4 adders
/// per transposed direct-form II section.
inline constexpr int kBaselineMultipliersPerFilter = 10;
inline constexpr int kBaselineAddersPerFilter = 8;

/// Per-filter structure of the shared serial datapath. Slots are classified
/// across every channel in the bank, enabled or not, because the datapath is
/// time-multiplexed over all of them.
FilterStructure analyze_structure(const FilterBank &bank);

// --- precision search --------------------------------------------------------

struct PrecisionPoint {
  int b_bits = 0;
  int a_bits = 0;
  bool stable = false;
  double score = 0.0;
  bool admissible = false;
  std::string note;
};

struct PrecisionReport {
  int b_bits = 0;
  int a_bits = 0;
  double baseline_score = 0.0;
  double chosen_score = 0.0;
  std::vector<PrecisionPoint> grid;
};

using BankMetric = std::function<double(const FilterBank &)>;

/// Evaluates every (b, a) pair, higher score is better. A point is admissible
/// when it quantizes stably and scores at least baseline - tolerance, where
/// the baseline is the 16b/16b bank. Returns the admissible point with the
/// smallest b + a (ties: higher score, then smaller b). Grid points may be
/// evaluated concurrently with `workers` threads.
PrecisionReport precision_search(const PrototypeBank &proto, std::span<const int> candidate_b_bits,
                                 std::span<const int> candidate_a_bits, const BankMetric &metric,
                                 double tolerance, int workers = 1,
                                 CoefficientFit fit = CoefficientFit::refine_peak);

}  // namespace dkws::design
