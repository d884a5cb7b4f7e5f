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
 * Acceptance checks P1-P8. Prints one "P<n> PASS|FAIL <detail>" line per
 * criterion and exits non-zero if any criterion fails.
 */

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "dkws/accel_model.hpp"
#include "dkws/dataset.hpp"
#include "dkws/delta_gru.hpp"
#include "dkws/experiments.hpp"
#include "dkws/fex.hpp"
#include "dkws/filter_design.hpp"
#include "dkws/formats.hpp"
#include "dkws/synth.hpp"
#include "dkws/weights_io.hpp"
#include "support/oracles.hpp"

using namespace dkws;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char *id, const std::function<Outcome()> &check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception &e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  fmt::print("{} {} {} [{:.1f} s]\n", id, o.pass ? "PASS" : "FAIL", o.detail, secs);
  std::fflush(stdout);
}

std::vector<std::int32_t> to_activation(const std::vector<std::int32_t> &features) {
  std::vector<std::int32_t> x(features.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = features[i] << kFeatureToActivationShift;
  return x;
}

// --- P1 ------------------------------------------------------------------------

Outcome p1_dense_delta_equivalence() {
  constexpr int kWeightSets = 1000;
  constexpr int kFrames = 100;
  std::int64_t compared = 0;
  for (int s = 0; s < kWeightSets; ++s) {
    const auto w = gru::random_weights(gru::Dims{}, static_cast<std::uint64_t>(s));
    std::mt19937_64 rng(1000000 + s);
    std::uniform_int_distribution<int> feature(0, kFeatureMax);
    auto state = gru::DeltaState::initial(w);
    std::vector<std::int32_t> h_dense(w.dims.n_hid, 0);
    for (int t = 0; t < kFrames; ++t) {
      std::vector<std::int32_t> f(w.dims.n_in);
      for (auto &v : f) v = feature(rng);
      const auto x = to_activation(f);
      const auto h_delta = gru::delta_gru_step(state, x, 0, w);
      const auto h_next = gru::gru_step_dense(x, h_dense, w);
      const auto h_oracle = oracle::gru_step(x, h_dense, w);
      if (h_delta != h_next || h_next != h_oracle) {
        return {false, fmt::format("hidden state differs: weight set {} frame {}", s, t)};
      }
      const auto logits = gru::fc_forward(h_delta, w);
      if (logits != gru::fc_forward(h_next, w) || logits != oracle::fc(h_oracle, w)) {
        return {false, fmt::format("logits differ: weight set {} frame {}", s, t)};
      }
      h_dense = h_next;
      ++compared;
    }
  }
  return {true, fmt::format("{} weight sets x {} frames: hidden states and logits bit-exact ({} steps)", kWeightSets,
                            kFrames, compared)};
}

// --- P2 / P3 -------------------------------------------------------------------

struct ThetaMetrics {
  std::int64_t fired = 0;
  std::int64_t macs = 0;
  std::int64_t reads = 0;
  std::int64_t cycles = 0;
  double energy = 0.0;
};

struct SweepResult {
  std::vector<double> thetas;
  std::vector<std::vector<ThetaMetrics>> per_utterance;  // [u][theta]
  std::int64_t bound_checks = 0;
  std::int64_t bound_violations = 0;
  std::string first_violation;
};

const SweepResult &p2_sweep() {
  static const SweepResult result = [] {
    SweepResult r;
    for (int i = 0; i <= 10; ++i) r.thetas.push_back(i * 0.05);
    const auto cal = accel::calibrate(accel::paper_dense_point(), accel::paper_sparse_point(), accel::CostModel{});
    const auto base = design::default_filter_bank();
    const auto bank = fex::select_channels(base, design::speech_window_mask(base));
    const auto clips = exp::synthetic_clips(100, 0);
    const auto features = exp::compute_features(clips, bank);
    for (std::size_t u = 0; u < features.size(); ++u) {
      const auto w = gru::random_weights(gru::Dims{}, 5000 + u);
      std::vector<ThetaMetrics> row;
      for (double theta : r.thetas) {
        const auto th = gru::quantize_theta(theta);
        auto state = gru::DeltaState::initial(w);
        gru::UtteranceStats stats;
        stats.n_in = w.dims.n_in;
        stats.n_hid = w.dims.n_hid;
        for (const auto &f : features[u].frames) {
          const auto x = to_activation(f);
          const auto h_before = state.h_prev;
          gru::FrameStats fs;
          gru::delta_gru_step(state, x, th, w, &fs);
          // P3: the reconstructions used this step are within theta.
          for (std::size_t i = 0; i < x.size(); ++i) {
            ++r.bound_checks;
            if (std::abs(std::int64_t{state.x_hat[i]} - x[i]) > th) {
              if (r.bound_violations++ == 0) r.first_violation = fmt::format("x, utterance {} theta {}", u, theta);
            }
          }
          for (std::size_t i = 0; i < h_before.size(); ++i) {
            ++r.bound_checks;
            if (std::abs(std::int64_t{state.h_hat[i]} - h_before[i]) > th) {
              if (r.bound_violations++ == 0) r.first_violation = fmt::format("h, utterance {} theta {}", u, theta);
            }
          }
          stats.per_frame.push_back(fs);
          stats.fired_x += fs.fired_x;
          stats.fired_h += fs.fired_h;
          stats.macs += fs.macs;
          stats.weights_touched += fs.weights_touched;
          ++stats.frames;
        }
        const auto cost = accel::evaluate(stats, cal.model, bank.enabled_count());
        row.push_back({stats.fired_x + stats.fired_h, cost.macs, cost.weight_reads, cost.cycles, cost.energy_nj});
      }
      r.per_utterance.push_back(std::move(row));
    }
    return r;
  }();
  return result;
}

Outcome p2_monotonicity() {
  const auto &r = p2_sweep();
  const std::size_t n_theta = r.thetas.size();
  int violating = 0;
  std::string example;
  ThetaMetrics prev_total;
  bool aggregate_monotone = true;
  for (std::size_t k = 0; k < n_theta; ++k) {
    ThetaMetrics total;
    for (const auto &row : r.per_utterance) {
      total.fired += row[k].fired;
      total.macs += row[k].macs;
      total.reads += row[k].reads;
      total.cycles += row[k].cycles;
      total.energy += row[k].energy;
    }
    if (k > 0 && (total.fired > prev_total.fired || total.macs > prev_total.macs || total.reads > prev_total.reads ||
                  total.cycles > prev_total.cycles || total.energy > prev_total.energy)) {
      aggregate_monotone = false;
    }
    prev_total = total;
  }
  for (std::size_t u = 0; u < r.per_utterance.size(); ++u) {
    const auto &row = r.per_utterance[u];
    for (std::size_t k = 1; k < n_theta; ++k) {
      const auto &a = row[k - 1];
      const auto &b = row[k];
      if (b.fired > a.fired || b.macs > a.macs || b.reads > a.reads || b.cycles > a.cycles || b.energy > a.energy) {
        if (violating == 0) {
          example = fmt::format("utterance {}: fired {} at theta {:.2f} -> {} at theta {:.2f}", u, a.fired,
                                r.thetas[k - 1], b.fired, r.thetas[k]);
        }
        ++violating;
        break;
      }
    }
  }
  if (violating == 0) {
    return {true, fmt::format("100 utterances x {} thresholds: fired, MACs, reads, cycles, energy non-increasing "
                              "per utterance",
                              n_theta)};
  }
  return {false, fmt::format("{}/100 utterances not monotone per utterance (first: {}); aggregate over all "
                             "utterances {}",
                             violating, example, aggregate_monotone ? "is monotone" : "is NOT monotone")};
}

Outcome p3_reconstruction_bound() {
  const auto &r = p2_sweep();
  if (r.bound_violations != 0) {
    return {false, fmt::format("{} of {} checks exceed theta (first: {})", r.bound_violations, r.bound_checks,
                               r.first_violation)};
  }
  return {true, fmt::format("|x_hat - x| <= theta and |h_hat - h| <= theta on all {} element checks", r.bound_checks)};
}

// --- P4 --------------------------------------------------------------------------

Outcome p4_filter_bank() {
  const auto proto = design::design_prototype_bank();
  const auto bank = design::quantize_bank(proto, 12, 8);
  int stable = 0;
  double worst_gain_db = 0.0;
  for (std::size_t c = 0; c < bank.channels.size(); ++c) {
    for (const auto &s : bank.channels[c].sos) stable += design::stability_check(s);
    const double f = proto.channels[c].design_hz;
    const double gq = std::abs(design::frequency_response(bank.channels[c].sos, f, bank.sample_rate_hz));
    const double gf = std::abs(design::frequency_response(proto.channels[c].sos, f, proto.sample_rate_hz));
    worst_gain_db = std::max(worst_gain_db, std::abs(20 * std::log10(gq / gf)));
  }
  const auto mask = design::speech_window_mask(bank);
  const auto selected = fex::select_channels(bank, mask).enabled_indices();
  const double lo = bank.channels[selected.front()].center_hz;
  const double hi = bank.channels[selected.back()].center_hz;
  const double lo_err = lo / design::kSpeechWindowLowHz - 1;
  const double hi_err = hi / design::kSpeechWindowHighHz - 1;
  const bool pass = bank.channels.size() == 16 && stable == 32 && worst_gain_db <= 1.0 &&
                    static_cast<int>(selected.size()) == 10 && std::abs(lo_err) <= 0.15 && std::abs(hi_err) <= 0.15;
  return {pass, fmt::format("{}/32 sections stable; worst center-gain deviation {:.3f} dB; window mask {:#06x} "
                            "spans {:.0f} Hz ({:+.1f}%) .. {:.0f} Hz ({:+.1f}%) over {} channels",
                            stable, worst_gain_db, mask, lo, 100 * lo_err, hi, 100 * hi_err, selected.size())};
}

// --- P5 --------------------------------------------------------------------------

Outcome p5_shift_substitution() {
  const auto bank = design::default_filter_bank();
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<std::int64_t> state_raw(kStateFormat.min_raw(), kStateFormat.max_raw());
  std::int64_t compared = 0;
  int coefficients = 0;
  for (const auto &ch : bank.channels) {
    for (const auto &s : ch.sos) {
      const std::pair<const std::optional<std::vector<CsdTerm>> *, FixedValue> slots[] = {
          {&s.csd_b0, s.b0}, {&s.csd_a1, s.a1}, {&s.csd_a2, s.a2}};
      for (const auto &[csd, coeff] : slots) {
        if (!csd->has_value()) continue;
        ++coefficients;
        const auto check = [&](std::int64_t raw) {
          const FixedValue x{static_cast<std::int32_t>(raw), kStateFormat};
          ++compared;
          return shift_mul(x, **csd, kStateFormat) == mul_shift(x, coeff, kStateFormat);
        };
        // Every 12-bit sample as it enters the datapath ...
        for (std::int64_t v = kSampleFormat.min_raw(); v <= kSampleFormat.max_raw(); ++v) {
          if (!check(rescale_raw(v, kSampleFormat.frac_bits(), kStateFormat, Rounding::nearest_even))) {
            return {false, fmt::format("mismatch for coefficient {} at sample {}", coeff.raw, v)};
          }
        }
        // ... every low-order state value, the format edges, and random states.
        for (std::int64_t v = -(1 << 16); v <= (1 << 16); ++v) {
          if (!check(v)) return {false, fmt::format("mismatch for coefficient {} at state {}", coeff.raw, v)};
        }
        for (std::int64_t v : {kStateFormat.min_raw(), kStateFormat.max_raw(), kStateFormat.min_raw() + 1}) {
          if (!check(v)) return {false, fmt::format("mismatch for coefficient {} at state {}", coeff.raw, v)};
        }
        for (int i = 0; i < 20000; ++i) {
          const auto v = state_raw(rng);
          if (!check(v)) return {false, fmt::format("mismatch for coefficient {} at state {}", coeff.raw, v)};
        }
      }
    }
  }
  const auto st = design::analyze_structure(bank);
  const bool pass = coefficients > 0 && st.multipliers == design::kBaselineMultipliersPerFilter / 2;
  return {pass, fmt::format("{} CSD coefficients, {} products identical; multipliers per 4th-order filter {} -> {} "
                            "({} shift slots, {} adders)",
                            coefficients, compared, design::kBaselineMultipliersPerFilter, st.multipliers, st.shifts,
                            st.adders)};
}

// --- P6 --------------------------------------------------------------------------

Outcome p6_calibration() {
  const auto dense_target = accel::paper_dense_point();
  const auto sparse_target = accel::paper_sparse_point();
  const auto cal = accel::calibrate(dense_target, sparse_target, accel::CostModel{});
  const gru::Dims dims;
  const auto dense = accel::predict(cal.model, dims, 0.0, 62);
  const auto sparse = accel::predict(cal.model, dims, sparse_target.sparsity, 62);
  const auto rel = [](double got, double want) { return (got - want) / want; };
  const bool dense_ok = std::abs(rel(dense.energy_nj, dense_target.energy_nj)) < 1e-9 &&
                        std::abs(rel(dense.latency_ms, dense_target.latency_ms)) < 1e-9;
  const bool sparse_energy_ok = std::abs(rel(sparse.energy_nj, sparse_target.energy_nj)) <= 0.01;
  const bool sparse_latency_ok = std::abs(rel(sparse.latency_ms, sparse_target.latency_ms)) <= 0.01;
  gru::FrameStats dense_frame;
  dense_frame.macs = 3 * 64 * 74 + 64 * 12;
  const bool arithmetic_ok = dense_frame.macs == 14976 && accel::frame_cycles(dense_frame, accel::CostModel{}) == 1872;
  return {dense_ok && sparse_energy_ok && sparse_latency_ok && arithmetic_ok,
          fmt::format("dense {:.4f} nJ / {:.4f} ms ({}); sparse {:.3f} nJ ({:+.3f}%) / {:.3f} ms ({:+.2f}%){}; "
                      "14976 MACs -> {} cycles",
                      dense.energy_nj, dense.latency_ms, dense_ok ? "exact" : "off", sparse.energy_nj,
                      100 * rel(sparse.energy_nj, sparse_target.energy_nj), sparse.latency_ms,
                      100 * rel(sparse.latency_ms, sparse_target.latency_ms),
                      sparse_latency_ok ? "" : " - sparse latency outside 1% (one cycle parameter cannot fit both)",
                      accel::frame_cycles(dense_frame, accel::CostModel{}))};
}

// --- P7 --------------------------------------------------------------------------

Outcome p7_channel_linearity() {
  const auto bank = design::default_filter_bank();
  const auto audio = data::prepare_utterance(data::WavData{16000, synth::utterance(11, 1)});
  fex::OpCounts ops16, ops10;
  fex::extract_features(audio, fex::select_channels(bank, 0xffff), &ops16);
  fex::extract_features(audio, fex::select_channels(bank, design::speech_window_mask(bank)), &ops10);
  const bool pass = ops10.total() * 16 == ops16.total() * 10;
  return {pass, fmt::format("10 channels {} ops, 16 channels {} ops, ratio {:.4f}", ops10.total(), ops16.total(),
                            static_cast<double>(ops10.total()) / ops16.total())};
}

// --- P8 --------------------------------------------------------------------------

Outcome p8_dataset_integrity() {
  const std::string data_dir = DKWS_TEST_DATA_DIR;
  const auto bytes = read_file_bytes(data_dir + "/golden_16k.wav");
  const auto wav = data::parse_wav(bytes);
  std::ifstream txt(data_dir + "/golden_16k.txt");
  const std::vector<std::int16_t> golden{std::istream_iterator<int>(txt), std::istream_iterator<int>()};
  const bool wav_ok = wav.sample_rate == 16000 && wav.samples == golden &&
                      data::encode_wav(wav.sample_rate, wav.samples) == bytes &&
                      data::load_wav(data_dir + "/golden_16k_list.wav").samples == golden;

  const auto root = fs::temp_directory_path() / fmt::format("dkws_acceptance_{}", ::getpid());
  fs::remove_all(root);
  synth::write_synthetic_gscd(root.string());
  const auto a = data::plan_splits(root.string());
  const auto b = data::plan_splits(root.string());
  bool splits_ok = true;
  for (auto s : {data::Split::train, data::Split::val, data::Split::test}) {
    const auto &x = a.get(s);
    const auto &y = b.get(s);
    splits_ok = splits_ok && x.size() == y.size() && !x.empty();
    for (std::size_t i = 0; splits_ok && i < x.size(); ++i) {
      splits_ok = x[i].path == y[i].path && x[i].noise_offset == y[i].noise_offset && x[i].label == y[i].label;
    }
  }
  const auto test = data::load_split(root.string(), a.test);
  const bool leak_free = data::find_leaks(data::load_split(root.string(), a.train), test).empty();
  fs::remove_all(root);

  // One-second utterances of any source length always give 62 frames.
  const auto bank = fex::select_channels(design::default_filter_bank(), 0x1ff8);
  int frame_checks = 0;
  bool frames_ok = true;
  for (std::size_t len : {std::size_t{100}, std::size_t{15999}, std::size_t{16000}, std::size_t{24000}}) {
    const auto u = data::prepare_utterance(data::WavData{16000, std::vector<std::int16_t>(len, 300)});
    frames_ok = frames_ok && fex::extract_features(u, bank).size() == 62;
    ++frame_checks;
  }
  for (const auto &u : test) {
    frames_ok = frames_ok && fex::extract_features(u.samples, bank).size() == 62;
    ++frame_checks;
  }
  return {wav_ok && splits_ok && leak_free && frames_ok,
          fmt::format("golden WAV round trip {}; splits deterministic {} ({} test utterances, leak-free {}); "
                      "62 frames in {}/{} utterances",
                      wav_ok ? "ok" : "FAILED", splits_ok ? "yes" : "no", a.test.size(), leak_free ? "yes" : "no",
                      frames_ok ? frame_checks : 0, frame_checks)};
}

}  // namespace

int main() {
  report("P1", p1_dense_delta_equivalence);
  report("P2", p2_monotonicity);
  report("P3", p3_reconstruction_bound);
  report("P4", p4_filter_bank);
  report("P5", p5_shift_substitution);
  report("P6", p6_calibration);
  report("P7", p7_channel_linearity);
  report("P8", p8_dataset_integrity);
  fmt::print("{} of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
