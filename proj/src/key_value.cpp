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

#include "dkws/key_value.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dkws/error.hpp"

namespace dkws {

namespace {

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::optional<std::int64_t> parse_int(const std::string &text) {
  std::string t = trim(text);
  bool negative = false;
  std::size_t pos = 0;
  if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
    negative = t[0] == '-';
    pos = 1;
  }
  int base = 10;
  if (t.size() > pos + 2 && t[pos] == '0' && (t[pos + 1] == 'x' || t[pos + 1] == 'X')) {
    base = 16;
    pos += 2;
  }
  if (pos >= t.size()) return std::nullopt;
  std::uint64_t magnitude = 0;
  const char *begin = t.data() + pos;
  const char *end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, magnitude, base);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  if (negative) {
    if (magnitude > static_cast<std::uint64_t>(INT64_MAX) + 1) return std::nullopt;
    return static_cast<std::int64_t>(0 - magnitude);
  }
  if (magnitude > static_cast<std::uint64_t>(INT64_MAX)) return std::nullopt;
  return static_cast<std::int64_t>(magnitude);
}

std::optional<double> parse_double(const std::string &text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  // strtod keeps this independent of from_chars<double> support.
  errno = 0;
  char *end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

KeyValueDoc KeyValueDoc::parse(std::istream &in, const std::string &source) {
  KeyValueDoc doc;
  doc.source_ = source;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCategory::format, fmt::format("{}:{}: expected 'key = value'", source, line_no));
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCategory::format, fmt::format("{}:{}: empty key", source, line_no));
    if (doc.entries_.count(key) != 0) {
      throw Error(ErrorCategory::format, fmt::format("{}:{}: duplicate key '{}' (first on line {})", source,
                                                     line_no, key, doc.lines_.at(key)));
    }
    doc.entries_.emplace(key, value);
    doc.lines_.emplace(key, line_no);
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, fmt::format("cannot open '{}'", path));
  return parse(in, path);
}

bool KeyValueDoc::has(const std::string &key) const { return entries_.count(key) != 0; }

const std::string &KeyValueDoc::get(const std::string &key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCategory::format, fmt::format("{}: missing key '{}'", source_, key));
  used_.insert(key);
  return it->second;
}

std::optional<std::string> KeyValueDoc::find(const std::string &key) const {
  if (!has(key)) return std::nullopt;
  return get(key);
}

std::int64_t KeyValueDoc::get_int(const std::string &key) const {
  const auto v = parse_int(get(key));
  if (!v) {
    throw Error(ErrorCategory::format,
                fmt::format("{}:{}: '{}' is not an integer", source_, lines_.at(key), entries_.at(key)));
  }
  return *v;
}

double KeyValueDoc::get_double(const std::string &key) const {
  const auto v = parse_double(get(key));
  if (!v) {
    throw Error(ErrorCategory::format,
                fmt::format("{}:{}: '{}' is not a finite number", source_, lines_.at(key), entries_.at(key)));
  }
  return *v;
}

std::vector<std::int64_t> KeyValueDoc::get_int_list(const std::string &key) const {
  std::istringstream ss(get(key));
  std::vector<std::int64_t> out;
  std::string token;
  while (ss >> token) {
    const auto v = parse_int(token);
    if (!v) {
      throw Error(ErrorCategory::format,
                  fmt::format("{}:{}: '{}' is not an integer", source_, lines_.at(key), token));
    }
    out.push_back(*v);
  }
  return out;
}

void KeyValueDoc::reject_unused() const {
  for (const auto &[key, value] : entries_) {
    if (used_.count(key) == 0) {
      throw Error(ErrorCategory::format, fmt::format("{}:{}: unknown key '{}'", source_, lines_.at(key), key));
    }
  }
}

}  // namespace dkws
