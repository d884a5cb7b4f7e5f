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

#include "dkws/filter_design.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "dkws/error.hpp"
#include "dkws/formats.hpp"

namespace dkws::design {

namespace {

using cplx = std::complex<double>;

cplx unit_delay(double freq_hz, int sample_rate_hz) {
  // z^-1 on the unit circle.
  return std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
}

cplx section_response(const SOSCoefficients &s, cplx zinv) {
  const cplx num = s.b0 + zinv * (s.b1 + zinv * s.b2);
  const cplx den = 1.0 + zinv * (s.a1 + zinv * s.a2);
  return num / den;
}

struct FeedbackRaw {
  std::array<std::int64_t, 4> v{};  // a1, a2 of section 0, then section 1
};

// |H| at freq_hz of the two quantized feedback sections with unit numerators (1 - z^-2).
double unit_gain(const FeedbackRaw &r, QFormat a_fmt, double freq_hz, int fs) {
  const double lsb = a_fmt.lsb();
  const std::array<SOSCoefficients, 2> s{SOSCoefficients{1.0, 0.0, -1.0, r.v[0] * lsb, r.v[1] * lsb},
                                         SOSCoefficients{1.0, 0.0, -1.0, r.v[2] * lsb, r.v[3] * lsb}};
  return std::abs(frequency_response(s, freq_hz, fs));
}

bool stable(double a1, double a2) { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }

double peak_log_error(const FeedbackRaw &r, QFormat a_fmt, double center_hz, int fs) {
  const double lsb = a_fmt.lsb();
  const std::array<SOSCoefficients, 2> s{SOSCoefficients{1.0, 0.0, -1.0, r.v[0] * lsb, r.v[1] * lsb},
                                         SOSCoefficients{1.0, 0.0, -1.0, r.v[2] * lsb, r.v[3] * lsb}};
  const double lo = center_hz / 4.0;
  const double hi = std::min(center_hz * 4.0, 0.499 * fs);
  return std::abs(std::log(peak_frequency(s, fs, lo, hi) / center_hz));
}

FeedbackRaw fit_feedback(const PrototypeChannel &ch, QFormat a_fmt, CoefficientFit fit, int fs) {
  FeedbackRaw rounded;
  for (int s = 0; s < 2; ++s) {
    rounded.v[2 * s] = quantize(ch.sos[s].a1, a_fmt).raw;
    rounded.v[2 * s + 1] = quantize(ch.sos[s].a2, a_fmt).raw;
  }
  if (fit == CoefficientFit::round_nearest) return rounded;

  const double lsb = a_fmt.lsb();
  auto is_stable = [&](const FeedbackRaw &r) {
    return stable(r.v[0] * lsb, r.v[1] * lsb) && stable(r.v[2] * lsb, r.v[3] * lsb);
  };
  constexpr double kGoodEnough = 0.01;  // 1% peak offset needs no search
  constexpr int kReach = 2;             // +/- LSBs per coefficient
  double best_err = is_stable(rounded) ? peak_log_error(rounded, a_fmt, ch.design_hz, fs)
                                       : std::numeric_limits<double>::infinity();
  if (best_err <= kGoodEnough) return rounded;

  FeedbackRaw best = rounded;
  int best_dist = 0;
  FeedbackRaw cand;
  for (int d0 = -kReach; d0 <= kReach; ++d0) {
    for (int d1 = -kReach; d1 <= kReach; ++d1) {
      for (int d2 = -kReach; d2 <= kReach; ++d2) {
        for (int d3 = -kReach; d3 <= kReach; ++d3) {
          const std::array<int, 4> d{d0, d1, d2, d3};
          bool in_range = true;
          for (int k = 0; k < 4; ++k) {
            cand.v[k] = rounded.v[k] + d[k];
            in_range = in_range && cand.v[k] >= a_fmt.min_raw() && cand.v[k] <= a_fmt.max_raw();
          }
          if (!in_range || !is_stable(cand)) continue;
          const double err = peak_log_error(cand, a_fmt, ch.design_hz, fs);
          const int dist = std::abs(d0) + std::abs(d1) + std::abs(d2) + std::abs(d3);
          if (err < best_err - 1e-12 || (std::abs(err - best_err) <= 1e-12 && dist < best_dist)) {
            best_err = err;
            best = cand;
            best_dist = dist;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace

SOSCoefficients QuantizedSOS::dequantized() const {
  return SOSCoefficients{b0.to_double(), 0.0, b2.to_double(), a1.to_double(), a2.to_double()};
}

QuantizedSOS make_quantized_sos(std::int64_t b0, std::int64_t b2, std::int64_t a1, std::int64_t a2,
                                QFormat b_fmt, QFormat a_fmt) {
  QuantizedSOS q;
  q.b0 = FixedValue::from_raw(b0, b_fmt);
  q.b2 = FixedValue::from_raw(b2, b_fmt);
  q.a1 = FixedValue::from_raw(a1, a_fmt);
  q.a2 = FixedValue::from_raw(a2, a_fmt);
  q.frac_b = b_fmt.frac_bits();
  q.frac_a = a_fmt.frac_bits();
  auto csd = [](std::int64_t raw, int frac) -> std::optional<std::vector<CsdTerm>> {
    auto terms = csd_terms(raw, frac);
    if (terms.empty() || terms.size() > 2) return std::nullopt;
    return terms;
  };
  q.csd_b0 = csd(b0, q.frac_b);
  q.csd_a1 = csd(a1, q.frac_a);
  q.csd_a2 = csd(a2, q.frac_a);
  return q;
}

int FilterBank::enabled_count() const {
  return static_cast<int>(std::count_if(channels.begin(), channels.end(), [](const auto &c) { return c.enabled; }));
}

std::vector<int> FilterBank::enabled_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(channels.size()); ++i) {
    if (channels[i].enabled) out.push_back(i);
  }
  return out;
}

std::uint32_t FilterBank::enable_mask() const {
  std::uint32_t m = 0;
  for (int i : enabled_indices()) m |= 1u << i;
  return m;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies(int n, double f_lo_hz, double f_hi_hz) {
  if (n < 1 || n > kMaxChannels) throw std::invalid_argument(fmt::format("channel count {} outside 1..16", n));
  if (!(f_lo_hz > 0.0) || !(f_hi_hz > f_lo_hz)) {
    throw std::invalid_argument(fmt::format("invalid frequency range [{}, {}]", f_lo_hz, f_hi_hz));
  }
  const double m_lo = hz_to_mel(f_lo_hz);
  const double m_hi = hz_to_mel(f_hi_hz);
  if (n == 1) return {mel_to_hz(0.5 * (m_lo + m_hi))};
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n - 1));
  out.front() = f_lo_hz;
  out.back() = f_hi_hz;
  return out;
}

int best_channel_window(std::span<const double> centers, int width, double lo_hz, double hi_hz) {
  const int n = static_cast<int>(centers.size());
  if (width < 1 || width > n) throw std::invalid_argument("window wider than the bank");
  int best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int start = 0; start + width <= n; ++start) {
    const double err = std::max(std::abs(std::log(centers[start] / lo_hz)),
                                std::abs(std::log(centers[start + width - 1] / hi_hz)));
    if (err < best_err) {
      best_err = err;
      best = start;
    }
  }
  return best;
}

std::uint32_t speech_window_mask(const FilterBank &bank) {
  std::vector<double> centers;
  for (const auto &ch : bank.channels) centers.push_back(ch.center_hz);
  const int start = best_channel_window(centers, kSpeechWindowChannels, kSpeechWindowLowHz, kSpeechWindowHighHz);
  return ((1u << kSpeechWindowChannels) - 1u) << start;
}

double clamp_design_center(double center_hz, int sample_rate_hz) {
  return std::min(center_hz, kMaxCenterFraction * sample_rate_hz);
}

std::array<SOSCoefficients, 2> design_bandpass(double center_hz, double q_factor, int sample_rate_hz) {
  if (sample_rate_hz <= 0) throw std::invalid_argument("sample rate must be positive");
  if (!(q_factor > 0.0) || !std::isfinite(q_factor)) throw std::invalid_argument("Q must be positive");
  if (!(center_hz > 0.0) || !std::isfinite(center_hz)) throw std::invalid_argument("center must be positive");
  const double fc = clamp_design_center(center_hz, sample_rate_hz);
  const double fs = sample_rate_hz;
  if (fc >= 0.5 * fs) throw std::invalid_argument("center at or above Nyquist");

  // Pre-warped analog center and bandwidth.
  const double w0 = 2.0 * fs * std::tan(std::numbers::pi * fc / fs);
  const double bw = w0 / q_factor;
  // Upper-half-plane pole of the 2nd-order Butterworth low-pass prototype.
  const cplx p = std::polar(1.0, 3.0 * std::numbers::pi / 4.0);
  const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0 * w0);
  const std::array<cplx, 2> s_poles{(p * bw + disc) / 2.0, (p * bw - disc) / 2.0};

  std::array<SOSCoefficients, 2> out;
  for (int k = 0; k < 2; ++k) {
    const cplx z = (1.0 + s_poles[k] / (2.0 * fs)) / (1.0 - s_poles[k] / (2.0 * fs));
    out[k] = SOSCoefficients{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)};
  }
  const double g = 1.0 / std::abs(frequency_response(out, fc, sample_rate_hz));
  const double per_section = std::sqrt(g);
  for (auto &s : out) {
    s.b0 = per_section;
    s.b2 = -per_section;
  }
  return out;
}

std::complex<double> frequency_response(std::span<const SOSCoefficients> sections, double freq_hz,
                                        int sample_rate_hz) {
  const cplx zinv = unit_delay(freq_hz, sample_rate_hz);
  cplx h = 1.0;
  for (const auto &s : sections) h *= section_response(s, zinv);
  return h;
}

std::complex<double> frequency_response(std::span<const QuantizedSOS> sections, double freq_hz,
                                        int sample_rate_hz) {
  const cplx zinv = unit_delay(freq_hz, sample_rate_hz);
  cplx h = 1.0;
  for (const auto &s : sections) h *= section_response(s.dequantized(), zinv);
  return h;
}

double peak_frequency(std::span<const SOSCoefficients> sections, int sample_rate_hz, double lo_hz,
                      double hi_hz) {
  constexpr int kGrid = 512;
  auto mag = [&](double f) { return std::abs(frequency_response(sections, f, sample_rate_hz)); };
  const double ratio = std::pow(hi_hz / lo_hz, 1.0 / kGrid);
  int best = 0;
  double best_mag = -1.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double m = mag(lo_hz * std::pow(ratio, i));
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  // Golden-section refinement inside the neighbouring grid cells.
  double a = lo_hz * std::pow(ratio, std::max(best - 1, 0));
  double b = lo_hz * std::pow(ratio, std::min(best + 1, kGrid));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double mc = mag(c);
  double md = mag(d);
  for (int it = 0; it < 60; ++it) {
    if (mc > md) {
      b = d;
      d = c;
      md = mc;
      c = b - inv_phi * (b - a);
      mc = mag(c);
    } else {
      a = c;
      c = d;
      mc = md;
      d = a + inv_phi * (b - a);
      md = mag(d);
    }
  }
  return 0.5 * (a + b);
}

bool stability_check(const SOSCoefficients &sos) { return stable(sos.a1, sos.a2); }

bool stability_check(const QuantizedSOS &sos) { return stable(sos.a1.to_double(), sos.a2.to_double()); }

int integer_bits_for(double max_abs) {
  int bits = 1;
  while (!(max_abs < std::ldexp(1.0, bits - 1))) {
    ++bits;
    if (bits > 32) throw std::invalid_argument("coefficient magnitude too large");
  }
  return bits;
}

QuantizedSOS quantize_coefficients(const SOSCoefficients &sos, QFormat b_fmt, QFormat a_fmt) {
  if (sos.b1 != 0.0) throw std::invalid_argument("quantize_coefficients: band-pass sections need b1 = 0");
  const auto q = make_quantized_sos(quantize(sos.b0, b_fmt).raw, quantize(sos.b2, b_fmt).raw,
                                    quantize(sos.a1, a_fmt).raw, quantize(sos.a2, a_fmt).raw, b_fmt, a_fmt);
  if (!stability_check(q)) {
    throw Error(ErrorCategory::numeric, fmt::format("quantized section unstable: a1={} a2={} in {}",
                                                    q.a1.to_double(), q.a2.to_double(), a_fmt.to_string()));
  }
  return q;
}

QuantizedSOS quantize_coefficients(const SOSCoefficients &sos, int b_bits, int a_bits) {
  if (b_bits < 4 || a_bits < 4) throw std::invalid_argument("coefficient widths must be at least 4 bits");
  const int b_int = integer_bits_for(std::max(std::abs(sos.b0), std::abs(sos.b2)));
  const int a_int = integer_bits_for(std::max(std::abs(sos.a1), std::abs(sos.a2)));
  if (b_int >= b_bits || a_int >= a_bits) {
    throw Error(ErrorCategory::numeric, "coefficient range leaves no fraction bits");
  }
  return quantize_coefficients(sos, QFormat{b_bits, b_bits - b_int}, QFormat{a_bits, a_bits - a_int});
}

PrototypeBank design_prototype_bank(int n_channels, double f_lo_hz, double f_hi_hz, int sample_rate_hz) {
  const auto centers = mel_center_frequencies(n_channels, f_lo_hz, f_hi_hz);
  const double m_lo = hz_to_mel(f_lo_hz);
  const double m_hi = hz_to_mel(f_hi_hz);
  const double spacing = n_channels > 1 ? (m_hi - m_lo) / (n_channels - 1) : (m_hi - m_lo);

  PrototypeBank bank;
  bank.sample_rate_hz = sample_rate_hz;
  for (double fc : centers) {
    const double m = hz_to_mel(fc);
    const double lower = mel_to_hz(std::max(m - 0.5 * spacing, 0.0));
    const double upper = mel_to_hz(m + 0.5 * spacing);
    PrototypeChannel ch;
    ch.center_hz = fc;
    ch.design_hz = clamp_design_center(fc, sample_rate_hz);
    ch.q = fc / (upper - lower);
    ch.sos = design_bandpass(fc, ch.q, sample_rate_hz);
    bank.channels.push_back(ch);
  }
  return bank;
}

FixedValue default_offset() { return quantize(8.0, kLogFormat); }

FixedValue default_scale() { return quantize(5.0, kScaleFormat); }

FilterBank default_filter_bank(int sample_rate_hz) {
  return quantize_bank(design_prototype_bank(kMaxChannels, kDefaultLowHz, kDefaultHighHz, sample_rate_hz), 12, 8);
}

FilterBank quantize_bank(const PrototypeBank &proto, int b_bits, int a_bits, CoefficientFit fit) {
  if (proto.channels.empty()) throw std::invalid_argument("quantize_bank: empty prototype bank");
  if (b_bits < 4 || b_bits > 32 || a_bits < 4 || a_bits > 32) {
    throw std::invalid_argument(fmt::format("coefficient widths {}b/{}b outside 4..32", b_bits, a_bits));
  }
  const int fs = proto.sample_rate_hz;

  // Feedback family: one shared format sized by the largest |a| in the bank.
  double max_a = 0.0;
  for (const auto &ch : proto.channels) {
    for (const auto &s : ch.sos) max_a = std::max({max_a, std::abs(s.a1), std::abs(s.a2)});
  }
  const int a_int = integer_bits_for(max_a);
  if (a_int >= a_bits) throw Error(ErrorCategory::numeric, fmt::format("{} feedback bits leave no fraction", a_bits));
  const QFormat a_fmt{a_bits, a_bits - a_int};

  std::vector<FeedbackRaw> feedback;
  std::vector<double> gains;  // linear gain restoring 0 dB at the design center
  for (std::size_t i = 0; i < proto.channels.size(); ++i) {
    const auto &ch = proto.channels[i];
    feedback.push_back(fit_feedback(ch, a_fmt, fit, fs));
    const double lsb = a_fmt.lsb();
    const auto &r = feedback.back();
    if (!stable(r.v[0] * lsb, r.v[1] * lsb) || !stable(r.v[2] * lsb, r.v[3] * lsb)) {
      throw Error(ErrorCategory::numeric,
                  fmt::format("channel {} ({:.1f} Hz) unstable with {}b feedback coefficients", i, ch.center_hz, a_bits));
    }
    gains.push_back(1.0 / unit_gain(r, a_fmt, ch.design_hz, fs));
  }

  // Section-0 gain: one power of two near the geometric mean of sqrt(G), so
  // it is a wired shift; section 1 carries the rest of each channel's gain.
  double log_mean = 0.0;
  for (double g : gains) log_mean += 0.5 * std::log2(g);
  log_mean /= static_cast<double>(gains.size());
  int k = static_cast<int>(std::lround(-log_mean));
  QFormat b_fmt{b_bits, 0};
  for (;;) {
    const double g0 = std::ldexp(1.0, -k);
    double max_b = g0;
    for (double g : gains) max_b = std::max(max_b, g / g0);
    const int b_int = integer_bits_for(max_b);
    if (b_int >= b_bits) throw Error(ErrorCategory::numeric, fmt::format("{} gain bits leave no fraction", b_bits));
    b_fmt = QFormat{b_bits, b_bits - b_int};
    if (k <= b_fmt.frac_bits()) break;
    k = b_fmt.frac_bits();  // 2^-k must be representable
  }
  const std::int64_t b0_first = std::int64_t{1} << (b_fmt.frac_bits() - k);

  FilterBank bank;
  bank.sample_rate_hz = fs;
  bank.b_bits = b_bits;
  bank.a_bits = a_bits;
  bank.frac_b = b_fmt.frac_bits();
  bank.frac_a = a_fmt.frac_bits();
  for (std::size_t i = 0; i < proto.channels.size(); ++i) {
    const auto &ch = proto.channels[i];
    const auto &r = feedback[i];
    const double g1 = gains[i] / std::ldexp(1.0, -k);
    std::int64_t b0_second = quantize(g1, b_fmt).raw;
    if (b0_second == 0) b0_second = 1;  // keep the channel alive at very low precision
    BankChannel out;
    out.center_hz = ch.center_hz;
    out.design_hz = ch.design_hz;
    out.q = ch.q;
    out.sos[0] = make_quantized_sos(b0_first, -b0_first, r.v[0], r.v[1], b_fmt, a_fmt);
    out.sos[1] = make_quantized_sos(b0_second, -b0_second, r.v[2], r.v[3], b_fmt, a_fmt);
    out.offset = default_offset();
    out.scale = default_scale();
    bank.channels.push_back(out);
  }
  return bank;
}

FilterStructure analyze_structure(const FilterBank &bank) {
  if (bank.channels.empty()) throw std::invalid_argument("analyze_structure: empty bank");
  FilterStructure out;
  int extra_adders = 0;
  for (int s = 0; s < 2; ++s) {
    // Classifies one coefficient slot across the whole bank.
    auto classify = [&](auto raw_of, auto csd_of) {
      const std::int64_t first = raw_of(bank.channels.front().sos[s]);
      bool constant = true;
      bool zero = true;
      for (const auto &ch : bank.channels) {
        constant = constant && raw_of(ch.sos[s]) == first;
        zero = zero && raw_of(ch.sos[s]) == 0;
      }
      if (zero) return SlotKind::absent;
      const auto &csd = csd_of(bank.channels.front().sos[s]);
      if (constant && csd.has_value()) {
        extra_adders += static_cast<int>(csd->size()) - 1;
        return SlotKind::shift;
      }
      return SlotKind::multiplier;
    };
    auto &slots = out.sections[s].slots;
    slots[0] = classify([](const QuantizedSOS &q) { return std::int64_t{q.b0.raw}; },
                        [](const QuantizedSOS &q) -> const auto & { return q.csd_b0; });
    slots[1] = SlotKind::absent;  // band-pass numerators have no z^-1 term
    const bool b2_shared = std::all_of(bank.channels.begin(), bank.channels.end(),
                                       [&](const BankChannel &c) { return c.sos[s].b2.raw == -c.sos[s].b0.raw; });
    if (b2_shared && slots[0] != SlotKind::absent) {
      slots[2] = SlotKind::shared;
    } else {
      const auto b2_csd = [](const QuantizedSOS &q) {
        auto t = csd_terms(q.b2.raw, q.frac_b);
        return (t.empty() || t.size() > 2) ? std::optional<std::vector<CsdTerm>>{} : std::optional{t};
      };
      const std::int64_t first = bank.channels.front().sos[s].b2.raw;
      bool constant = true;
      for (const auto &ch : bank.channels) constant = constant && ch.sos[s].b2.raw == first;
      const auto csd = b2_csd(bank.channels.front().sos[s]);
      if (first == 0 && constant) {
        slots[2] = SlotKind::absent;
      } else if (constant && csd) {
        slots[2] = SlotKind::shift;
        extra_adders += static_cast<int>(csd->size()) - 1;
      } else {
        slots[2] = SlotKind::multiplier;
      }
    }
    slots[3] = classify([](const QuantizedSOS &q) { return std::int64_t{q.a1.raw}; },
                        [](const QuantizedSOS &q) -> const auto & { return q.csd_a1; });
    slots[4] = classify([](const QuantizedSOS &q) { return std::int64_t{q.a2.raw}; },
                        [](const QuantizedSOS &q) -> const auto & { return q.csd_a2; });

    for (SlotKind k : slots) {
      if (k == SlotKind::multiplier) ++out.multipliers;
      if (k == SlotKind::shift) ++out.shifts;
    }
    // Transposed DF-II: y = b0 x + s1; s1' = s2 + b1 x - a1 y; s2' = b2 x - a2 y.
    auto present = [](SlotKind k) { return k != SlotKind::absent; };
    int adders = 1;
    adders += (present(slots[1]) ? 1 : 0) + (present(slots[3]) ? 1 : 0);
    adders += std::max((present(slots[2]) ? 1 : 0) + (present(slots[4]) ? 1 : 0) - 1, 0);
    out.adders += adders;
  }
  out.adders += extra_adders;
  return out;
}

PrecisionReport precision_search(const PrototypeBank &proto, std::span<const int> candidate_b_bits,
                                 std::span<const int> candidate_a_bits, const BankMetric &metric,
                                 double tolerance, int workers, CoefficientFit fit) {
  if (candidate_b_bits.empty() || candidate_a_bits.empty()) {
    throw std::invalid_argument("precision_search: empty candidate grid");
  }
  if (!metric) throw std::invalid_argument("precision_search: no metric");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("precision_search: tolerance must be >= 0");
  workers = std::max(workers, 1);

  PrecisionReport report;
  report.baseline_score = metric(quantize_bank(proto, 16, 16, fit));

  for (int b : candidate_b_bits) {
    for (int a : candidate_a_bits) {
      PrecisionPoint pt;
      pt.b_bits = b;
      pt.a_bits = a;
      report.grid.push_back(pt);
    }
  }
  auto evaluate = [&](PrecisionPoint &pt) {
    try {
      const FilterBank bank = quantize_bank(proto, pt.b_bits, pt.a_bits, fit);
      pt.stable = true;
      pt.score = metric(bank);
    } catch (const Error &e) {
      if (e.category() != ErrorCategory::numeric) throw;
      pt.stable = false;
      pt.score = -std::numeric_limits<double>::infinity();
      pt.note = e.what();
    }
    pt.admissible = pt.stable && pt.score >= report.baseline_score - tolerance;
  };
  // Strided split across threads; each point is written by exactly one task.
  std::vector<std::future<void>> tasks;
  const std::size_t n = report.grid.size();
  const std::size_t n_tasks = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    tasks.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < n; i += n_tasks) evaluate(report.grid[i]);
    }));
  }
  for (auto &f : tasks) f.get();

  const PrecisionPoint *best = nullptr;
  for (const auto &pt : report.grid) {
    if (!pt.admissible) continue;
    if (best == nullptr) {
      best = &pt;
      continue;
    }
    const int cost = pt.b_bits + pt.a_bits;
    const int best_cost = best->b_bits + best->a_bits;
    if (cost < best_cost || (cost == best_cost && (pt.score > best->score ||
                                                   (pt.score == best->score && pt.b_bits < best->b_bits)))) {
      best = &pt;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorCategory::numeric,
                fmt::format("no admissible precision within tolerance {} of baseline {:.3f}", tolerance,
                            report.baseline_score));
  }
  report.b_bits = best->b_bits;
  report.a_bits = best->a_bits;
  report.chosen_score = best->score;
  return report;
}

}  // namespace dkws::design
