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
 * Filter-bank file: the text contract between filter design and the feature
 * extractor. See docs in README.md ("Filter-bank file") for the key list.
 */

#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "dkws/filter_design.hpp"

namespace dkws {

inline constexpr int kBankFileVersion = 1;

/// Writes every field needed to rebuild the bank bit-exactly.
void write_bank(std::ostream &out, const design::FilterBank &bank);
void save_bank(const std::string &path, const design::FilterBank &bank);

/// Parses and validates a bank document. dkws::Error(format) for syntax,
/// missing or unknown keys; dkws::Error(validation) for values that break a
/// bank invariant (raw range, stability, center ordering, enable mask).
/// CSD lists are re-derived from the raw coefficients.
design::FilterBank read_bank(std::istream &in, const std::string &source = "<bank>");
design::FilterBank load_bank(const std::string &path);

/// Checks the invariants read_bank enforces; throws dkws::Error(validation).
void validate_bank(const design::FilterBank &bank);

}  // namespace dkws
