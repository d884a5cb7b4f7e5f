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
 * Line-oriented "key = value" text documents, used by the filter-bank file,
 * the cost-model file and the CLI config file.
 *
 * Blank lines and lines starting with '#' are ignored. Keys are unique.
 * Values are trimmed but otherwise taken verbatim.
 */

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dkws {

class KeyValueDoc {
 public:
  /// Throws dkws::Error(format) on a line without '=', an empty key or a
  /// duplicate key. `source` names the document in error messages.
  static KeyValueDoc parse(std::istream &in, const std::string &source);
  /// Reads and parses a file; dkws::Error(io) if it cannot be opened.
  static KeyValueDoc load(const std::string &path);

  bool has(const std::string &key) const;
  /// Throws dkws::Error(format) when the key is missing.
  const std::string &get(const std::string &key) const;
  std::optional<std::string> find(const std::string &key) const;

  /// Typed accessors; dkws::Error(format) on missing keys or malformed values.
  std::int64_t get_int(const std::string &key) const;
  double get_double(const std::string &key) const;
  std::vector<std::int64_t> get_int_list(const std::string &key) const;

  /// Throws dkws::Error(format) listing any key never read through an
  /// accessor above, so typos in hand-edited files do not pass silently.
  void reject_unused() const;

  const std::string &source() const { return source_; }
  const std::map<std::string, std::string> &entries() const { return entries_; }

 private:
  std::string source_;
  std::map<std::string, std::string> entries_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

/// Strict integer / real parsing of a whole token (no trailing junk).
/// Integers accept an optional 0x prefix.
std::optional<std::int64_t> parse_int(const std::string &text);
std::optional<double> parse_double(const std::string &text);

}  // namespace dkws
