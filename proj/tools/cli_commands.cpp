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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "cli.hpp"
#include "cli_internal.hpp"
#include "dkws/bank_io.hpp"
#include "dkws/dataset.hpp"
#include "dkws/fex.hpp"
#include "dkws/formats.hpp"
#include "dkws/key_value.hpp"
#include "dkws/plot.hpp"
#include "dkws/weights_io.hpp"

namespace dkws::cli {

namespace fs = std::filesystem;

namespace {

// --- inputs -------------------------------------------------------------------------------

fs::path out_dir(const RunConfig &cfg) {
  const fs::path dir = cfg.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCategory::io, fmt::format("cannot create output directory '{}'", cfg.out));
  }
  return dir;
}

std::ofstream open_out(const fs::path &path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCategory::io, fmt::format("cannot write '{}'", path.string()));
  return f;
}

void require_file(const std::string &path, const char *what) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCategory::io, fmt::format("{} '{}' does not exist", what, path));
}

/// The bank file, or the designed 12b/8b bank with every channel enabled.
design::FilterBank base_bank(const RunConfig &cfg) {
  if (cfg.bank.empty()) return design::default_filter_bank();
  require_file(cfg.bank, "bank file");
  return load_bank(cfg.bank);
}

/// Bank for single-mask commands: --mask if given, else the bank file's own
/// mask, else the speech window of the designed bank.
design::FilterBank resolve_bank(const RunConfig &cfg) {
  auto bank = base_bank(cfg);
  if (!cfg.mask.empty()) {
    const auto masks = parse_mask_list(cfg.mask, static_cast<int>(bank.channels.size()));
    if (masks.size() != 1) throw Error(ErrorCategory::usage, "this command takes a single --mask");
    return fex::select_channels(bank, masks.front());
  }
  if (cfg.bank.empty()) return fex::select_channels(bank, design::speech_window_mask(bank));
  return bank;
}

gru::Dims model_dims(const RunConfig &cfg, int n_in) {
  return gru::Dims{cfg.n_in > 0 ? cfg.n_in : n_in, cfg.n_hid, cfg.n_out};
}

/// "random:SEED" or a weight file.
gru::NetworkWeights load_model(const RunConfig &cfg, const std::string &spec, int n_in) {
  if (spec.rfind("random:", 0) == 0) {
    const auto seed = parse_int(spec.substr(7));
    if (!seed || *seed < 0) throw Error(ErrorCategory::usage, fmt::format("--weights: bad seed in '{}'", spec));
    return gru::random_weights(model_dims(cfg, n_in), static_cast<std::uint64_t>(*seed));
  }
  require_file(spec, "weight file");
  return load_weights(spec);
}

void require_inputs(const gru::NetworkWeights &w, int n_in, const std::string &what) {
  if (w.dims.n_in != n_in) {
    throw Error(ErrorCategory::validation,
                fmt::format("{} has {} inputs but {} channels are enabled", what, w.dims.n_in, n_in));
  }
}

std::optional<accel::CostModel> load_cost(const Context &ctx, bool warn_missing) {
  if (ctx.cfg.cost_model.empty()) {
    if (warn_missing) ctx.warn("no --cost-model given: latency and energy columns omitted");
    return std::nullopt;
  }
  require_file(ctx.cfg.cost_model, "cost-model file");
  return accel::load_cost_model(ctx.cfg.cost_model);
}

std::string safe_name(std::string s) {
  if (s.size() > 4 && s.compare(s.size() - 4, 4, ".wav") == 0) s.resize(s.size() - 4);
  for (char &c : s) {
    if (c == '/' || c == '\\' || c == ',' || c == ' ') c = '_';
  }
  return s;
}

/// Evenly strided subset, so a limited run still covers every word folder.
template <typename T>
std::vector<T> take_strided(std::vector<T> items, int limit) {
  if (limit <= 0 || static_cast<std::size_t>(limit) >= items.size()) return items;
  std::vector<T> picked;
  for (int i = 0; i < limit; ++i) picked.push_back(items[static_cast<std::size_t>(i) * items.size() / limit]);
  return picked;
}

data::Split parse_split(const std::string &s) {
  if (s == "train") return data::Split::train;
  if (s == "val") return data::Split::val;
  return data::Split::test;
}

/// Positional WAV files, else --synthetic clips, else the dataset split.
/// Empty when none of them is configured.
std::vector<exp::Clip> gather_clips(const Context &ctx) {
  const auto &cfg = ctx.cfg;
  std::vector<exp::Clip> clips;
  if (!cfg.inputs.empty()) {
    for (const auto &path : take_strided(cfg.inputs, cfg.limit)) {
      require_file(path, "audio file");
      const auto wav = data::load_wav(path);
      const fs::path p(path);
      clips.push_back(exp::Clip{safe_name(p.filename().string()), data::label_id(p.parent_path().filename().string()),
                                data::prepare_utterance(wav)});
    }
    return clips;
  }
  if (cfg.synthetic > 0) return take_strided(exp::synthetic_clips(cfg.synthetic, cfg.seed), cfg.limit);
  if (cfg.dataset_root.empty()) return clips;
  data::DatasetOptions opts;
  opts.seed = cfg.seed;
  opts.include_train = cfg.split == "train";
  const auto plan = data::plan_splits(cfg.dataset_root, opts);
  const auto refs = take_strided(plan.get(parse_split(cfg.split)), cfg.limit);
  auto utts = data::load_split(cfg.dataset_root, refs, cfg.workers);
  int silence = 0;
  for (auto &u : utts) {
    std::string name = u.label == data::kSilence ? fmt::format("silence_{:04d}", silence++) : safe_name(u.source);
    clips.push_back(exp::Clip{std::move(name), u.label, std::move(u.samples)});
  }
  return clips;
}

std::vector<exp::Clip> require_clips(const Context &ctx) {
  auto clips = gather_clips(ctx);
  if (clips.empty()) {
    throw Error(ErrorCategory::usage, fmt::format("no utterances: pass WAV files, --dataset-root (or {}) or --synthetic N",
                                                  kDatasetRootEnv));
  }
  return clips;
}

std::vector<double> thetas_or(const RunConfig &cfg, const std::string &fallback) {
  return parse_theta_list(cfg.theta.empty() ? fallback : cfg.theta);
}

double single_theta(const Context &ctx, double fallback) {
  if (ctx.cfg.theta.empty()) return fallback;
  const auto thetas = parse_theta_list(ctx.cfg.theta);
  if (thetas.size() > 1) ctx.warn(fmt::format("using only the first --theta value {}", thetas.front()));
  return thetas.front();
}

std::string decision_name(int id, const gru::NetworkWeights &w) {
  if (w.dims.n_out == data::kNumClasses) return std::string(data::label_name(id));
  return std::to_string(id);
}

std::string label_text(int label) { return label >= 0 ? std::string(data::label_name(label)) : std::string{}; }

/// Per-frame FEx operations of a bank, measured on the extractor's own counter.
std::uint64_t fex_ops_per_frame(const design::FilterBank &bank) {
  fex::FeatureExtractor fx(bank);
  for (int i = 0; i < fex::kFrameLength; ++i) fx.push(0);
  return fx.ops().total();
}

// --- CSV ----------------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string &name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
  std::vector<double> numbers(const std::string &name) const {
    std::vector<double> v;
    const int c = column(name);
    for (const auto &r : rows) {
      const auto d = c >= 0 && c < static_cast<int>(r.size()) ? parse_double(r[c]) : std::nullopt;
      v.push_back(d.value_or(std::nan("")));
    }
    return v;
  }
};

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<CsvTable> read_csv(const fs::path &path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  CsvTable t;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split_csv(line);
    } else {
      t.rows.push_back(split_csv(line));
    }
  }
  if (t.header.empty()) throw Error(ErrorCategory::format, fmt::format("'{}' has no header row", path.string()));
  return t;
}

// CSV schema identifiers; bump the suffix when columns change.
constexpr const char *kThetaSchema = "# schema: dkws-sweep-theta/1";
constexpr const char *kChannelSchema = "# schema: dkws-sweep-channels/1";
constexpr const char *kPrecisionSchema = "# schema: dkws-sweep-precision/1";
constexpr const char *kInferSchema = "# schema: dkws-infer/1";

std::vector<std::string> channel_labels(const design::FilterBank &bank) {
  std::vector<std::string> labels;
  for (int c : bank.enabled_indices()) labels.push_back(fmt::format("{:.0f} Hz", bank.channels[c].center_hz));
  return labels;
}

}  // namespace

// --- features -----------------------------------------------------------------------------

int cmd_features(const Context &ctx) {
  const auto bank = resolve_bank(ctx.cfg);
  const auto clips = gather_clips(ctx);
  if (clips.empty()) {
    ctx.warn("no utterances given; nothing written");
    return kExitOk;
  }
  const auto dir = out_dir(ctx.cfg);
  std::vector<std::vector<fex::FeatureFrame>> results(clips.size());
  exp::parallel_for(clips.size(), ctx.cfg.workers,
                    [&](std::size_t i) { results[i] = fex::extract_features(clips[i].samples, bank); });
  for (std::size_t i = 0; i < clips.size(); ++i) {
    fex::save_feature_csv((dir / (clips[i].name + ".csv")).string(), bank, results[i]);
    if (ctx.cfg.plot) {
      plot::HeatMap map;
      map.title = fmt::format("{} ({})", clips[i].name, clips[i].label >= 0 ? label_text(clips[i].label) : "unlabeled");
      map.x_label = "frame (16 ms)";
      map.row_labels = channel_labels(bank);
      map.v_max = kFeatureMax;
      for (const auto &f : results[i]) map.columns.emplace_back(f.values.begin(), f.values.end());
      plot::save_text((dir / (clips[i].name + ".svg")).string(), plot::render_svg(map));
    }
  }
  ctx.out << fmt::format("wrote features for {} utterance(s), {} channel(s), to {}\n", clips.size(),
                         bank.enabled_count(), dir.string());
  return kExitOk;
}

// --- infer --------------------------------------------------------------------------------

int cmd_infer(const Context &ctx) {
  const auto bank = resolve_bank(ctx.cfg);
  if (ctx.cfg.weights.empty()) throw Error(ErrorCategory::usage, "infer needs --weights (file or random:SEED)");
  const auto w = load_model(ctx.cfg, ctx.cfg.weights, bank.enabled_count());
  require_inputs(w, bank.enabled_count(), "weight file");
  const auto cm = load_cost(ctx, true);
  const double theta = single_theta(ctx, 0.2);
  const auto clips = require_clips(ctx);
  const auto dir = out_dir(ctx.cfg);

  const auto feats = exp::compute_features(clips, bank, ctx.cfg.workers);
  std::vector<exp::UtteranceOutcome> outcomes(feats.size());
  exp::parallel_for(feats.size(), ctx.cfg.workers, [&](std::size_t i) {
    outcomes[i] = exp::evaluate_utterance(feats[i].frames, theta, w, cm ? &*cm : nullptr, bank.enabled_count());
  });

  auto f = open_out(dir / "infer.csv");
  f << kInferSchema << '\n' << "utterance,label,decision,decision_11,frames,sparsity,macs";
  if (cm) f << ",weight_reads,cycles,latency_ms,energy_nj";
  f << '\n';
  int labeled = 0, correct = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto &o = outcomes[i];
    f << fmt::format("{},{},{},{},{},{:.6f},{}", feats[i].name, label_text(feats[i].label), decision_name(o.decision, w),
                     decision_name(o.decision_11, w), o.stats.frames, o.stats.temporal_sparsity(), o.stats.macs);
    if (o.cost) {
      f << fmt::format(",{},{},{:.6f},{:.6f}", o.cost->weight_reads, o.cost->cycles, o.cost->latency_ms,
                       o.cost->energy_nj);
    }
    f << '\n';
    if (feats[i].label >= 0) {
      ++labeled;
      correct += o.decision == feats[i].label ? 1 : 0;
    }
  }
  ctx.out << fmt::format("classified {} utterance(s) at theta={}", feats.size(), theta);
  if (labeled > 0) ctx.out << fmt::format(", accuracy {:.4f} over {} labeled", double(correct) / labeled, labeled);
  ctx.out << fmt::format("; wrote {}\n", (dir / "infer.csv").string());
  return kExitOk;
}

// --- sweep-theta --------------------------------------------------------------------------

int cmd_sweep_theta(const Context &ctx) {
  const auto bank = resolve_bank(ctx.cfg);
  if (ctx.cfg.weights.empty()) throw Error(ErrorCategory::usage, "sweep-theta needs --weights (file or random:SEED)");
  const auto w = load_model(ctx.cfg, ctx.cfg.weights, bank.enabled_count());
  require_inputs(w, bank.enabled_count(), "weight file");
  const auto cm = load_cost(ctx, true);
  const auto thetas = thetas_or(ctx.cfg, "0:0.5:0.05");
  const auto clips = require_clips(ctx);
  const auto dir = out_dir(ctx.cfg);

  const auto feats = exp::compute_features(clips, bank, ctx.cfg.workers);
  const auto rows = exp::sweep_theta(feats, w, thetas, cm ? &*cm : nullptr, bank.enabled_count(), ctx.cfg.workers);
  auto f = open_out(dir / "sweep_theta.csv");
  f << kThetaSchema << '\n' << "theta,accuracy_12,accuracy_11,sparsity";
  if (cm) f << ",mean_latency_ms,mean_energy_nj";
  f << '\n';
  for (const auto &r : rows) {
    f << fmt::format("{},{:.6f},{:.6f},{:.6f}", r.theta, r.accuracy_12, r.accuracy_11, r.sparsity);
    if (cm) f << fmt::format(",{:.6f},{:.6f}", r.mean_latency_ms, r.mean_energy_nj);
    f << '\n';
  }
  if (ctx.cfg.plot) {
    plot::LineChart c{"Accuracy and sparsity vs threshold", "theta", "fraction", {}};
    plot::Series a12{"accuracy_12", {}, {}}, a11{"accuracy_11", {}, {}}, sp{"sparsity", {}, {}};
    for (const auto &r : rows) {
      for (auto *s : {&a12, &a11, &sp}) s->x.push_back(r.theta);
      a12.y.push_back(r.accuracy_12);
      a11.y.push_back(r.accuracy_11);
      sp.y.push_back(r.sparsity);
    }
    c.series = {a12, a11, sp};
    plot::save_text((dir / "sweep_theta.svg").string(), plot::render_svg(c));
  }
  ctx.out << fmt::format("swept {} threshold(s) over {} utterance(s); wrote {}\n", rows.size(), feats.size(),
                         (dir / "sweep_theta.csv").string());
  return kExitOk;
}

// --- sweep-channels -----------------------------------------------------------------------

int cmd_sweep_channels(const Context &ctx) {
  const auto &cfg = ctx.cfg;
  const auto base = base_bank(cfg);
  const int width = static_cast<int>(base.channels.size());
  std::vector<std::uint32_t> masks;
  if (cfg.mask.empty()) {
    masks = {(width >= 32 ? 0xffffffffu : (1u << width) - 1u), design::speech_window_mask(base)};
  } else {
    masks = parse_mask_list(cfg.mask, width);
  }
  if (cfg.weights.empty()) throw Error(ErrorCategory::usage, "sweep-channels needs --weights (file, pattern or random:SEED)");
  const bool pattern = cfg.weights.find("{mask}") != std::string::npos || cfg.weights.find("{n}") != std::string::npos;

  // Resolve every mask's model before any computation starts.
  struct Job {
    std::uint32_t mask;
    design::FilterBank bank;
    gru::NetworkWeights weights;
    bool column_mode;
  };
  std::vector<Job> jobs;
  std::optional<gru::NetworkWeights> shared;
  for (auto mask : masks) {
    auto bank = fex::select_channels(base, mask);
    const int n = bank.enabled_count();
    gru::NetworkWeights w;
    bool column_mode = false;
    if (pattern) {
      std::string path = cfg.weights;
      for (auto [key, value] : {std::pair<std::string, std::string>{"{mask}", fmt::format("{:04x}", mask)},
                                std::pair<std::string, std::string>{"{n}", std::to_string(n)}}) {
        for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key)) path.replace(pos, key.size(), value);
      }
      if (!fs::is_regular_file(path)) {
        throw Error(ErrorCategory::validation, fmt::format("mask {:#06x} has no matching weight file '{}'", mask, path));
      }
      w = load_weights(path);
    } else if (cfg.weights.rfind("random:", 0) == 0) {
      w = load_model(cfg, cfg.weights, n);
    } else {
      if (!shared) shared = load_model(cfg, cfg.weights, n);
      w = *shared;
      column_mode = w.dims.n_in == width && n != width;
    }
    if (!column_mode && w.dims.n_in != n) {
      throw Error(ErrorCategory::validation,
                  fmt::format("mask {:#06x} enables {} channels but its weights expect {} inputs", mask, n, w.dims.n_in));
    }
    jobs.push_back(Job{mask, std::move(bank), std::move(w), column_mode});
  }
  const double theta = single_theta(ctx, 0.2);
  const auto clips = require_clips(ctx);
  const auto dir = out_dir(cfg);

  auto f = open_out(dir / "sweep_channels.csv");
  f << kChannelSchema << '\n' << "n_channels,accuracy,fex_ops_per_frame,mask,mode,accuracy_11,sparsity\n";
  plot::Series acc{"accuracy_12", {}, {}};
  for (const auto &job : jobs) {
    auto feats = exp::compute_features(clips, job.bank, cfg.workers);
    if (job.column_mode) {
      const auto positions = job.bank.enabled_indices();
      for (auto &cf : feats) cf.frames = exp::expand_columns(cf.frames, positions, width);
    }
    const double one[] = {theta};
    const auto row = exp::sweep_theta(feats, job.weights, one, nullptr, job.bank.enabled_count(), cfg.workers).front();
    const int n = job.bank.enabled_count();
    f << fmt::format("{},{:.6f},{},{:#06x},{},{:.6f},{:.6f}\n", n, row.accuracy_12, fex_ops_per_frame(job.bank), job.mask,
                     job.column_mode ? "column-mask" : "per-mask", row.accuracy_11, row.sparsity);
    acc.x.push_back(n);
    acc.y.push_back(row.accuracy_12);
  }
  if (cfg.plot) {
    plot::LineChart c{"Accuracy vs channel count", "enabled channels", "accuracy", {acc}};
    plot::save_text((dir / "sweep_channels.svg").string(), plot::render_svg(c));
  }
  ctx.out << fmt::format("swept {} mask(s) at theta={}; wrote {}\n", jobs.size(), theta,
                         (dir / "sweep_channels.csv").string());
  return kExitOk;
}

// --- sweep-precision ----------------------------------------------------------------------

int cmd_sweep_precision(const Context &ctx) {
  const auto &cfg = ctx.cfg;
  const auto b_grid = parse_int_list(cfg.b_bits.empty() ? "8,10,12,14,16" : cfg.b_bits);
  const auto a_grid = parse_int_list(cfg.a_bits.empty() ? "6,8,10,12,14,16" : cfg.a_bits);
  if (b_grid.empty() || a_grid.empty()) throw Error(ErrorCategory::usage, "precision grid is empty");
  const auto fit = cfg.fit == "round" ? design::CoefficientFit::round_nearest : design::CoefficientFit::refine_peak;
  const auto proto = design::design_prototype_bank();
  const auto reference = design::quantize_bank(proto, 16, 16, fit);
  std::uint32_t mask = design::speech_window_mask(reference);
  if (!cfg.mask.empty()) {
    const auto masks = parse_mask_list(cfg.mask, static_cast<int>(reference.channels.size()));
    if (masks.size() != 1) throw Error(ErrorCategory::usage, "sweep-precision takes a single --mask");
    mask = masks.front();
  }
  const bool by_accuracy = cfg.metric == "accuracy";
  const double tolerance = cfg.tolerance >= 0.0 ? cfg.tolerance : (by_accuracy ? 0.005 : 3.0);
  const auto ref_masked = fex::select_channels(reference, mask);
  std::optional<gru::NetworkWeights> model;
  double theta = 0.0;
  if (by_accuracy) {
    if (cfg.weights.empty()) throw Error(ErrorCategory::usage, "--metric accuracy needs --weights");
    model = load_model(cfg, cfg.weights, ref_masked.enabled_count());
    require_inputs(*model, ref_masked.enabled_count(), "weight file");
    theta = single_theta(ctx, 0.0);
  }
  auto clips = gather_clips(ctx);
  if (clips.empty()) {
    if (by_accuracy) throw Error(ErrorCategory::usage, "--metric accuracy needs labeled utterances");
    ctx.warn("no utterances given; scoring on 12 synthetic clips");
    clips = exp::synthetic_clips(12, cfg.seed);
  }
  const design::BankMetric metric = [&](const design::FilterBank &bank) {
    const auto masked = fex::select_channels(bank, mask);
    if (!by_accuracy) return exp::feature_snr_db(masked, ref_masked, clips);
    const auto feats = exp::compute_features(clips, masked, 1);
    const double one[] = {theta};
    return exp::sweep_theta(feats, *model, one, nullptr, masked.enabled_count(), 1).front().accuracy_12;
  };
  const auto report = design::precision_search(proto, b_grid, a_grid, metric, tolerance, cfg.workers, fit);
  const auto chosen = design::quantize_bank(proto, report.b_bits, report.a_bits, fit);
  const auto structure = design::analyze_structure(chosen);
  const auto dir = out_dir(cfg);

  auto f = open_out(dir / "sweep_precision.csv");
  f << kPrecisionSchema << '\n' << "# metric: " << (by_accuracy ? "accuracy_12" : "feature_snr_db") << '\n'
    << "b_bits,a_bits,multiplies_per_sample,metric,step,admissible\n";
  const auto metric_text = [](const design::PrecisionPoint &p) {
    return p.stable ? fmt::format("{:.4f}", p.score) : std::string("nan");
  };
  for (const auto &p : report.grid) {
    f << fmt::format("{},{},{},{},grid,{}\n", p.b_bits, p.a_bits, design::kBaselineMultipliersPerFilter, metric_text(p),
                     p.admissible ? 1 : 0);
  }
  f << fmt::format("16,16,{},{:.4f},baseline,1\n", design::kBaselineMultipliersPerFilter, report.baseline_score);
  f << fmt::format("{},{},{},{:.4f},mixed,1\n", report.b_bits, report.a_bits, design::kBaselineMultipliersPerFilter,
                   report.chosen_score);
  f << fmt::format("{},{},{},{:.4f},shift,1\n", report.b_bits, report.a_bits, structure.multipliers,
                   report.chosen_score);
  ctx.out << fmt::format(
      "chosen {}b/{}b: {} {:.4f} (16b/16b {:.4f}, tolerance {}); "
      "multipliers per filter {} -> {} with {} shift slot(s); wrote {}\n",
      report.b_bits, report.a_bits, by_accuracy ? "accuracy" : "feature SNR dB", report.chosen_score,
      report.baseline_score, tolerance,
      design::kBaselineMultipliersPerFilter, structure.multipliers, structure.shifts,
      (dir / "sweep_precision.csv").string());
  return kExitOk;
}

// --- calibrate ----------------------------------------------------------------------------

namespace {

std::vector<double> parse_point(const std::string &text, std::size_t n, const char *flag) {
  std::vector<double> v;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    const auto d = parse_double(item);
    if (!d) throw Error(ErrorCategory::usage, fmt::format("{}: '{}' is not a number", flag, item));
    v.push_back(*d);
  }
  if (v.size() != n) throw Error(ErrorCategory::usage, fmt::format("{} needs {} comma-separated values", flag, n));
  return v;
}

}  // namespace

int cmd_calibrate(const Context &ctx) {
  const auto &cfg = ctx.cfg;
  const auto d = parse_point(cfg.dense, 2, "--dense");
  const auto s = parse_point(cfg.sparse, 3, "--sparse");
  accel::CostModel tmpl;
  if (!cfg.cost_model.empty() && fs::is_regular_file(cfg.cost_model)) tmpl = accel::load_cost_model(cfg.cost_model);
  accel::CalibrationSetup setup;
  setup.dims = gru::Dims{cfg.n_in > 0 ? cfg.n_in : gru::kDefaultInputs, cfg.n_hid, cfg.n_out};
  const auto result = accel::calibrate({d[0], d[1], 0.0}, {s[0], s[1], s[2]}, tmpl, setup);
  const auto dir = out_dir(cfg);
  const auto path = dir / "cost_model.txt";
  accel::save_cost_model(path.string(), result.model, &result);
  ctx.out << fmt::format("bundle {:.6g} nJ/MAC, frame constant {:.6g} nJ, fixed cycles {}\n", result.bundle_nj_per_mac,
                         result.frame_constant_nj, result.model.cycles_frame_fixed);
  ctx.out << fmt::format("dense : {:.4f} ms, {:.4f} nJ (residuals {:+.3f}%, {:+.3f}%)\n", result.dense_predicted.latency_ms,
                         result.dense_predicted.energy_nj, 100 * result.dense_latency_residual, 100 * result.dense_energy_residual);
  ctx.out << fmt::format("sparse: {:.4f} ms, {:.4f} nJ (residuals {:+.3f}%, {:+.3f}%)\n",
                         result.sparse_predicted.latency_ms, result.sparse_predicted.energy_nj,
                         100 * result.sparse_latency_residual, 100 * result.sparse_energy_residual);
  if (std::abs(result.sparse_latency_residual) > 0.01) {
    ctx.warn("the sparse latency cannot be matched: the cycle model has a single free parameter (fixed cycles per frame)");
  }
  ctx.out << "wrote " << path.string() << '\n';
  return kExitOk;
}

// --- report -------------------------------------------------------------------------------

namespace {

std::string html_table(const CsvTable &t) {
  std::string h = "<table>\n<tr>";
  for (const auto &c : t.header) h += "<th>" + plot::xml_escape(c) + "</th>";
  h += "</tr>\n";
  for (const auto &r : t.rows) {
    h += "<tr>";
    for (const auto &c : r) h += "<td>" + plot::xml_escape(c) + "</td>";
    h += "</tr>\n";
  }
  return h + "</table>\n";
}

plot::Series series(const CsvTable &t, const std::string &x, const std::string &y, const std::string &name) {
  return plot::Series{name, t.numbers(x), t.numbers(y)};
}

}  // namespace

int cmd_report(const Context &ctx) {
  const auto dir = out_dir(ctx.cfg);
  const std::vector<std::string> inputs{"sweep_theta.csv", "sweep_channels.csv", "sweep_precision.csv"};
  std::map<std::string, CsvTable> tables;
  std::vector<std::string> missing;
  for (const auto &name : inputs) {
    if (auto t = read_csv(dir / name)) {
      tables.emplace(name, std::move(*t));
    } else {
      missing.push_back(name);
    }
  }
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  std::string html =
      "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>dkws report</title>\n"
      "<style>body{font-family:sans-serif;max-width:1000px;margin:2em auto}table{border-collapse:collapse}"
      "td,th{border:1px solid #bbb;padding:2px 8px;text-align:right}.missing{color:#a00}</style>\n"
      "</head><body>\n<h1>dkws experiment report</h1>\n";
  html += fmt::format("<p class=\"timestamp\">Generated {:%Y-%m-%dT%H:%M:%SZ}</p>\n", now);
  if (!missing.empty()) {
    html += "<p class=\"missing\">Missing inputs:";
    for (const auto &m : missing) html += " " + plot::xml_escape((dir / m).string());
    html += "</p>\n";
  }

  html += "<h2>Threshold sweep</h2>\n";
  if (auto it = tables.find("sweep_theta.csv"); it != tables.end()) {
    const auto &t = it->second;
    html += plot::render_svg(plot::LineChart{"Accuracy", "theta", "accuracy",
                                             {series(t, "theta", "accuracy_12", "12-class"),
                                              series(t, "theta", "accuracy_11", "11-class")}});
    html += plot::render_svg(plot::LineChart{"Temporal sparsity", "theta", "sparsity",
                                             {series(t, "theta", "sparsity", "sparsity")}});
    for (const auto &[col, title, unit] : {std::tuple{"mean_latency_ms", "Latency per frame", "ms"},
                                           std::tuple{"mean_energy_nj", "Energy per decision", "nJ"}}) {
      if (t.column(col) >= 0) {
        html += plot::render_svg(plot::LineChart{title, "theta", unit, {series(t, "theta", col, col)}});
      } else {
        html += fmt::format("<p>{}: no data (sweep ran without a cost model)</p>\n", title);
      }
    }
    html += html_table(t);
  } else {
    html += "<p>no data</p>\n";
  }

  html += "<h2>Channel sweep</h2>\n";
  if (auto it = tables.find("sweep_channels.csv"); it != tables.end()) {
    const auto &t = it->second;
    html += plot::render_svg(plot::LineChart{"Accuracy vs channels", "channels", "accuracy",
                                             {series(t, "n_channels", "accuracy", "accuracy")}});
    html += plot::render_svg(plot::LineChart{"FEx operations per frame", "channels", "ops",
                                             {series(t, "n_channels", "fex_ops_per_frame", "ops/frame")}});
    html += html_table(t);
  } else {
    html += "<p>no data</p>\n";
  }

  html += "<h2>Precision sweep</h2>\n";
  if (auto it = tables.find("sweep_precision.csv"); it != tables.end()) {
    html += html_table(it->second);
  } else {
    html += "<p>no data</p>\n";
  }
  html += "</body></html>\n";
  plot::save_text((dir / "report.html").string(), html);
  if (!missing.empty()) ctx.warn(fmt::format("{} input(s) missing; see the report", missing.size()));
  ctx.out << "wrote " << (dir / "report.html").string() << '\n';
  return kExitOk;
}

// --- design-bank / gen-weights / validate-weights -----------------------------------------

int cmd_design_bank(const Context &ctx) {
  const auto &cfg = ctx.cfg;
  const auto b = parse_int_list(cfg.b_bits.empty() ? "12" : cfg.b_bits);
  const auto a = parse_int_list(cfg.a_bits.empty() ? "8" : cfg.a_bits);
  if (b.size() != 1 || a.size() != 1) throw Error(ErrorCategory::usage, "design-bank takes one --b-bits and one --a-bits");
  const auto fit = cfg.fit == "round" ? design::CoefficientFit::round_nearest : design::CoefficientFit::refine_peak;
  auto bank = design::quantize_bank(design::design_prototype_bank(), b[0], a[0], fit);
  const auto mask = cfg.mask.empty() ? design::speech_window_mask(bank)
                                     : parse_mask_list(cfg.mask, static_cast<int>(bank.channels.size())).front();
  bank = fex::select_channels(bank, mask);
  const auto s = design::analyze_structure(bank);
  const auto path = out_dir(cfg) / "bank.txt";
  save_bank(path.string(), bank);
  ctx.out << fmt::format("{}b/{}b bank, mask {:#06x}: {} multipliers, {} shift slots, {} adders per filter; wrote {}\n",
                         b[0], a[0], mask, s.multipliers, s.shifts, s.adders, path.string());
  return kExitOk;
}

int cmd_gen_weights(const Context &ctx) {
  const auto dims = model_dims(ctx.cfg, gru::kDefaultInputs);
  const auto w = gru::random_weights(dims, ctx.cfg.seed);
  const auto path = out_dir(ctx.cfg) / "weights.bin";
  save_weights(path.string(), w);
  ctx.out << fmt::format("random weights {}-{}-{} (seed {}); wrote {}\n", dims.n_in, dims.n_hid, dims.n_out,
                         ctx.cfg.seed, path.string());
  return kExitOk;
}

int cmd_validate_weights(const Context &ctx) {
  auto files = ctx.cfg.inputs;
  if (files.empty() && !ctx.cfg.weights.empty()) files.push_back(ctx.cfg.weights);
  if (files.empty()) throw Error(ErrorCategory::usage, "validate-weights needs a weight file");
  for (const auto &path : files) {
    require_file(path, "weight file");
    const auto w = load_weights(path);
    ctx.out << fmt::format("{}: ok ({}-{}-{})\n", path, w.dims.n_in, w.dims.n_hid, w.dims.n_out);
  }
  return kExitOk;
}

}  // namespace dkws::cli
