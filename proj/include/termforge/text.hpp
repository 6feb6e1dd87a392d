// Copyright 2026 The termforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace termforge::text {

inline char fold_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

/// ASCII-only case folding, the same folding the store's NOCASE collation uses.
inline std::string fold(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = fold_ascii(c);
  return out;
}

inline bool equals(std::string_view a, std::string_view b, bool case_sensitive) {
  if (a.size() != b.size()) return false;
  if (case_sensitive) return a == b;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (fold_ascii(a[i]) != fold_ascii(b[i])) return false;
  return true;
}

/// Length in bytes of the UTF-8 sequence starting at s[i], or 0 if invalid.
inline std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char lead = byte(i);
  std::size_t len = 0;
  std::uint32_t cp = 0;
  if (lead < 0x80) return 1;
  if ((lead & 0xe0) == 0xc0) len = 2, cp = lead & 0x1f;
  else if ((lead & 0xf0) == 0xe0) len = 3, cp = lead & 0x0f;
  else if ((lead & 0xf8) == 0xf0) len = 4, cp = lead & 0x07;
  else return 0;
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((byte(i + k) & 0xc0) != 0x80) return 0;
    cp = (cp << 6) | (byte(i + k) & 0x3f);
  }
  static constexpr std::uint32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < min_for_len[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return 0;
  return len;
}

inline bool valid_utf8(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    auto n = utf8_sequence_length(s, i);
    if (n == 0) return false;
    i += n;
  }
  return true;
}

/// Splits into code points (as byte slices). Invalid bytes become single
/// one-byte units.
inline std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto n = utf8_sequence_length(s, i);
    if (n == 0) n = 1;
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

/// Whole-value wildcard match: '%' matches any run of characters (including
/// none) and '_' matches exactly one character. No escape character.
inline bool like_match(std::string_view value, std::string_view pattern, bool case_sensitive) {
  const auto v = code_points(value);
  const auto p = code_points(pattern);
  auto same = [&](std::string_view a, std::string_view b) { return equals(a, b, case_sensitive); };

  std::size_t vi = 0, pi = 0;
  std::optional<std::size_t> star_p;
  std::size_t star_v = 0;
  while (vi < v.size()) {
    if (pi < p.size() && p[pi] == "%") {
      star_p = pi++;
      star_v = vi;
    } else if (pi < p.size() && (p[pi] == "_" || same(p[pi], v[vi]))) {
      ++pi;
      ++vi;
    } else if (star_p) {
      pi = *star_p + 1;
      vi = ++star_v;
    } else {
      return false;
    }
  }
  while (pi < p.size() && p[pi] == "%") ++pi;
  return pi == p.size();
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace termforge::text
