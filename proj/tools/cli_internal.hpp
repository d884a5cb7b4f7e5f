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
 * Shared state of the CLI subcommands (internal to the tools/ library).
 */

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dkws/accel_model.hpp"
#include "dkws/delta_gru.hpp"
#include "dkws/experiments.hpp"
#include "dkws/filter_design.hpp"

namespace dkws::cli {

/// Everything a subcommand may read. Filled from flags, the --config file
/// and, for the dataset root only, the environment.
struct RunConfig {
  std::string dataset_root;
  std::string weights;      // path, or "random:SEED"; sweep-channels also expands {mask} and {n}
  std::string bank;         // empty: designed 12b/8b bank with the 10-channel speech window
  std::string cost_model;
  std::string out = "dkws_out";
  std::string theta;        // list; empty: command default
  std::string mask;         // list; empty: command default
  std::uint64_t seed = 0;
  int workers = 1;
  bool plot = false;

  std::string split = "test";
  int limit = 0;            // 0: all utterances
  int synthetic = 0;        // >0: use this many synthetic clips instead of a dataset
  std::string b_bits;       // precision grid / design-bank b bits
  std::string a_bits;
  std::string metric = "snr";  // precision metric: snr (feature SNR, dB) or accuracy (needs --weights)
  double tolerance = -1.0;  // below the 16b/16b baseline; negative: metric default
  std::string fit = "refine";
  std::string dense = "16.4,121.2";
  std::string sparse = "6.9,36.11,0.87";
  int n_in = 0;             // 0: enabled channel count of the bank
  int n_hid = gru::kDefaultHidden;
  int n_out = gru::kDefaultOutputs;
  std::vector<std::string> inputs;  // positional WAV / weight files
};

struct Context {
  const RunConfig &cfg;
  std::ostream &out;
  std::ostream &err;
  void warn(const std::string &msg) const { err << "warning: " << msg << '\n'; }
};

int cmd_features(const Context &ctx);
int cmd_infer(const Context &ctx);
int cmd_sweep_theta(const Context &ctx);
int cmd_sweep_channels(const Context &ctx);
int cmd_sweep_precision(const Context &ctx);
int cmd_calibrate(const Context &ctx);
int cmd_report(const Context &ctx);
int cmd_design_bank(const Context &ctx);
int cmd_gen_weights(const Context &ctx);
int cmd_validate_weights(const Context &ctx);

}  // namespace dkws::cli
