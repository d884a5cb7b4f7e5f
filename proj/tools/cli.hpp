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
 * Command-line driver. The whole program lives in run() so tests can call
 * it in-process with captured streams; main() only forwards argv.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dkws/error.hpp"

namespace dkws::cli {

/// Process exit codes. Each error category has its own code so scripts can
/// branch without parsing messages; the message itself starts with
/// "error[<category>]:".
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
int exit_code(ErrorCategory category);

/// Environment variable consulted when --dataset-root is not given.
inline constexpr const char *kDatasetRootEnv = "DKWS_DATASET_ROOT";

/// "0,0.1,0.2" or "start:stop:step" (inclusive). Values must be >= 0.
std::vector<double> parse_theta_list(const std::string &text);

/// Comma-separated channel masks. Each item is an integer bit mask (decimal
/// or 0x hex), an inclusive index range "lo-hi", or "all". Masks are checked
/// against `n_channels`.
std::vector<std::uint32_t> parse_mask_list(const std::string &text, int n_channels);

/// Comma-separated integers (precision grid axes).
std::vector<int> parse_int_list(const std::string &text);

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace dkws::cli
