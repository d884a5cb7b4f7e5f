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

#include "cli.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cli_internal.hpp"
#include "dkws/key_value.hpp"

namespace dkws::cli {

namespace {

std::vector<std::string> split_list(const std::string &text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    items.push_back(b == std::string::npos ? std::string{} : item.substr(b, e - b + 1));
  }
  return items;
}

double to_double(const std::string &token, const std::string &what) {
  const auto v = parse_double(token);
  if (!v) throw Error(ErrorCategory::usage, fmt::format("{}: '{}' is not a number", what, token));
  return *v;
}

}  // namespace

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::io: return 3;
    case ErrorCategory::format: return 4;
    case ErrorCategory::validation: return 5;
    case ErrorCategory::numeric: return 6;
  }
  return kExitInternal;
}

std::vector<double> parse_theta_list(const std::string &text) {
  std::vector<double> thetas;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::istringstream in(text);
    for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw Error(ErrorCategory::usage, fmt::format("--theta range '{}' is not start:stop:step", text));
    const double start = to_double(parts[0], "--theta");
    const double stop = to_double(parts[1], "--theta");
    const double step = to_double(parts[2], "--theta");
    if (step <= 0.0 || stop < start) throw Error(ErrorCategory::usage, fmt::format("--theta range '{}' is empty", text));
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
      // Round away binary noise so 0.15 prints and quantizes as 0.15.
      thetas.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    for (const auto &item : split_list(text)) thetas.push_back(to_double(item, "--theta"));
  }
  if (thetas.empty()) throw Error(ErrorCategory::usage, "--theta: empty list");
  for (double t : thetas) {
    if (!(t >= 0.0)) throw Error(ErrorCategory::usage, fmt::format("--theta: {} is negative", t));
  }
  return thetas;
}

std::vector<std::uint32_t> parse_mask_list(const std::string &text, int n_channels) {
  const std::uint32_t full = n_channels >= 32 ? 0xffffffffu : (1u << n_channels) - 1u;
  std::vector<std::uint32_t> masks;
  for (const auto &item : split_list(text)) {
    std::uint32_t mask = 0;
    const auto dash = item.find('-');
    if (item == "all") {
      mask = full;
    } else if (dash != std::string::npos && dash > 0) {
      const auto lo = parse_int(item.substr(0, dash));
      const auto hi = parse_int(item.substr(dash + 1));
      if (!lo || !hi || *lo < 0 || *hi < *lo || *hi >= n_channels) {
        throw Error(ErrorCategory::usage,
                    fmt::format("--mask: range '{}' must be lo-hi within 0..{}", item, n_channels - 1));
      }
      for (auto c = *lo; c <= *hi; ++c) mask |= 1u << c;
    } else {
      const auto v = parse_int(item);
      if (!v || *v <= 0 || *v > static_cast<std::int64_t>(full)) {
        throw Error(ErrorCategory::usage,
                    fmt::format("--mask: '{}' is not a nonzero mask over {} channels", item, n_channels));
      }
      mask = static_cast<std::uint32_t>(*v);
    }
    masks.push_back(mask);
  }
  if (masks.empty()) throw Error(ErrorCategory::usage, "--mask: empty list");
  return masks;
}

std::vector<int> parse_int_list(const std::string &text) {
  std::vector<int> values;
  for (const auto &item : split_list(text)) {
    const auto v = parse_int(item);
    if (!v) throw Error(ErrorCategory::usage, fmt::format("'{}' is not an integer", item));
    values.push_back(static_cast<int>(*v));
  }
  return values;
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  RunConfig cfg;
  CLI::App app{"dkws: bit-accurate delta-GRU keyword-spotting simulator", "dkws"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.option_defaults()->always_capture_default();

  app.add_option("--dataset-root", cfg.dataset_root, "Speech Commands root (list files + word folders)")
      ->envname(kDatasetRootEnv);
  app.add_option("--weights", cfg.weights, "weight file, or random:SEED");
  app.add_option("--bank", cfg.bank, "filter-bank file (default: designed 12b/8b bank, 10-channel window)");
  app.add_option("--cost-model", cfg.cost_model, "cost-model file written by 'calibrate'");
  app.add_option("--out", cfg.out, "output directory");
  // List options collect every token so "a,b" from a config file (which
  // CLI11 splits) and from the command line end up identical.
  std::vector<std::string> theta_items, mask_items, b_items, a_items;
  app.add_option("--theta", theta_items, "thresholds: list 0,0.1 or range start:stop:step");
  app.add_option("--mask", mask_items, "channel masks: 0x1ff8, 3-12 or all, comma separated");
  app.add_option("--seed", cfg.seed, "seed for splits, synthetic data and random weights");
  app.add_option("--workers", cfg.workers, "utterance-level worker threads")->check(CLI::Range(1, 256));
  app.add_flag("--plot", cfg.plot, "also write SVG plots");
  app.add_option("--split", cfg.split, "dataset split: train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  app.add_option("--limit", cfg.limit, "use at most N utterances (evenly strided)")->check(CLI::NonNegativeNumber);
  app.add_option("--synthetic", cfg.synthetic, "use N synthetic clips instead of a dataset")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--b-bits", b_items, "numerator bit widths (list)");
  app.add_option("--a-bits", a_items, "feedback bit widths (list)");
  app.add_option("--metric", cfg.metric, "precision metric: snr or accuracy")->check(CLI::IsMember({"snr", "accuracy"}));
  app.add_option("--tolerance", cfg.tolerance,
                 "precision tolerance below 16b/16b (default 3 dB for snr, 0.005 for accuracy)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--fit", cfg.fit, "feedback coefficient fit: refine or round")->check(CLI::IsMember({"refine", "round"}));
  app.add_option("--dense", cfg.dense, "dense operating point: latency_ms,energy_nj");
  app.add_option("--sparse", cfg.sparse, "sparse operating point: latency_ms,energy_nj,sparsity");
  app.add_option("--n-in", cfg.n_in, "network inputs (0: enabled channels)")->check(CLI::Range(0, gru::kMaxInputs));
  app.add_option("--n-hid", cfg.n_hid, "hidden units")->check(CLI::Range(1, gru::kMaxHidden));
  app.add_option("--n-out", cfg.n_out, "output classes")->check(CLI::Range(1, gru::kMaxOutputs));

  using Command = int (*)(const Context &);
  const std::vector<std::tuple<const char *, const char *, Command, bool>> commands{
      {"features", "extract 12-bit features to per-utterance CSV", cmd_features, true},
      {"infer", "classify utterances and report per-utterance cost", cmd_infer, true},
      {"sweep-theta", "accuracy / sparsity / latency / energy over thresholds", cmd_sweep_theta, false},
      {"sweep-channels", "accuracy and FEx op count over channel masks", cmd_sweep_channels, false},
      {"sweep-precision", "filter coefficient precision search", cmd_sweep_precision, false},
      {"calibrate", "fit the cost model to two operating points", cmd_calibrate, false},
      {"report", "collate sweep CSVs into an HTML report", cmd_report, false},
      {"design-bank", "design and quantize the filter bank file", cmd_design_bank, false},
      {"gen-weights", "write a seeded random weight file", cmd_gen_weights, false},
      {"validate-weights", "check weight files", cmd_validate_weights, true},
  };
  std::map<const CLI::App *, Command> dispatch;
  for (const auto &[name, help, fn, positional] : commands) {
    auto *sub = app.add_subcommand(name, help);
    if (positional) sub->add_option("inputs", cfg.inputs, "input files");
    dispatch[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error[usage]: " << e.what() << '\n';
    return exit_code(ErrorCategory::usage);
  }

  const auto join = [](const std::vector<std::string> &items) {
    std::string s;
    for (const auto &i : items) s += (s.empty() ? "" : ",") + i;
    return s;
  };
  cfg.theta = join(theta_items);
  cfg.mask = join(mask_items);
  cfg.b_bits = join(b_items);
  cfg.a_bits = join(a_items);

  const Context ctx{cfg, out, err};
  try {
    for (const auto *sub : app.get_subcommands()) return dispatch.at(sub)(ctx);
    return kExitInternal;
  } catch (const Error &e) {
    err << "error[" << to_string(e.category()) << "]: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::invalid_argument &e) {
    err << "error[usage]: " << e.what() << '\n';
    return exit_code(ErrorCategory::usage);
  } catch (const std::exception &e) {
    err << "error[internal]: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace dkws::cli
