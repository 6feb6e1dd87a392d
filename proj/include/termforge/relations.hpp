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

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "termforge/error.hpp"
#include "termforge/model.hpp"
#include "termforge/store.hpp"

namespace termforge {

enum class Direction { Descendants, Ancestors };

struct ClosureResult {
  std::vector<std::string> codes;  // ascending, without the start code
  std::size_t expansions = 0;      // number of neighbor lookups issued
};

/// In-memory adjacency for a link set, usable as a dag_closure lookup.
class LinkIndex {
 public:
  LinkIndex() = default;
  explicit LinkIndex(const std::vector<ParentLink>& links) {
    for (const auto& l : links) add(l);
  }

  void add(const ParentLink& l) {
    parents_[l.code].insert(l.parent_code);
    children_[l.parent_code].insert(l.code);
  }

  std::vector<std::string> operator()(std::string_view code, Direction dir) const {
    const auto& map = dir == Direction::Descendants ? children_ : parents_;
    auto it = map.find(code);
    if (it == map.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

 private:
  std::map<std::string, std::set<std::string>, std::less<>> parents_;
  std::map<std::string, std::set<std::string>, std::less<>> children_;
};

/// Reachability over a DAG by frontier expansion. Each reached node is
/// expanded at most once, so a shared descendant reached through several
/// parents costs a single lookup. `lookup(code, direction)` returns the
/// one-step neighbors of `code`.
template <typename Lookup>
ClosureResult dag_closure(Lookup&& lookup, std::string_view start, Direction direction, bool immediate_only = false) {
  ClosureResult result;
  std::unordered_set<std::string> visited{std::string(start)};
  std::deque<std::string> frontier{std::string(start)};
  while (!frontier.empty()) {
    std::string code = std::move(frontier.front());
    frontier.pop_front();
    ++result.expansions;
    for (auto& next : lookup(std::string_view(code), direction)) {
      if (next == start)
        throw Error(ErrorKind::CycleDetected, "'" + std::string(start) + "' is reachable from itself");
      if (!visited.insert(next).second) continue;
      if (!immediate_only) frontier.push_back(next);
      result.codes.push_back(std::move(next));
    }
    if (immediate_only) break;
  }
  std::sort(result.codes.begin(), result.codes.end());
  return result;
}

// ---------------------------------------------------------------------------
// Prefix hierarchies. pad_char '\0' means codes are not padded.

inline std::string_view strip_padding(std::string_view code, char pad_char) {
  if (pad_char == '\0') return code;
  auto end = code.find_last_not_of(pad_char);
  return end == std::string_view::npos ? code.substr(0, 0) : code.substr(0, end + 1);
}

/// Codes whose significant prefix strictly extends that of `code`; with
/// `immediate_only`, only those exactly one character longer.
template <typename Codes>
std::vector<std::string> prefix_children(const Codes& all_codes, std::string_view code, bool immediate_only,
                                         char pad_char = '.') {
  const auto base = strip_padding(code, pad_char);
  std::set<std::string> out;
  for (const auto& candidate : all_codes) {
    const auto sig = strip_padding(candidate, pad_char);
    if (sig.size() <= base.size() || sig.substr(0, base.size()) != base) continue;
    if (immediate_only && sig.size() != base.size() + 1) continue;
    out.emplace(candidate);
  }
  return {out.begin(), out.end()};
}

/// Proper prefixes of `code`, re-padded to its width. The empty prefix maps
/// to `root_code` when one is given and is dropped otherwise.
inline std::vector<std::string> prefix_parent(std::string_view code, bool immediate_only, char pad_char = '.',
                                              const std::optional<std::string>& root_code = std::nullopt) {
  const auto base = strip_padding(code, pad_char);
  std::set<std::string> out;
  if (base.empty()) return {};
  auto repad = [&](std::size_t keep) {
    std::string s(base.substr(0, keep));
    if (pad_char != '\0') s.append(code.size() - keep, pad_char);
    return s;
  };
  const std::size_t lowest = immediate_only ? base.size() - 1 : 1;
  for (std::size_t keep = base.size() - 1; keep >= lowest && keep >= 1; --keep) out.insert(repad(keep));
  if (root_code && *root_code != code && (!immediate_only || base.size() == 1)) out.insert(*root_code);
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// Store-backed queries

/// Neighbor lookup against a store's parent table.
class StoreLinkLookup {
 public:
  StoreLinkLookup(StoreHandle& handle, const DictionaryAdapter& adapter)
      : children_(handle.prepare(query(adapter, true))), parents_(handle.prepare(query(adapter, false))) {}

  std::vector<std::string> operator()(std::string_view code, Direction dir) {
    auto& st = dir == Direction::Descendants ? children_ : parents_;
    st.reset();
    st.bind(1, code);
    std::vector<std::string> out;
    while (st.step()) out.emplace_back(st.text(0));
    ++lookups_;
    return out;
  }

  std::size_t lookups() const noexcept { return lookups_; }

 private:
  static std::string query(const DictionaryAdapter& a, bool children) {
    const auto code_col = sql::quote_ident(*a.ptable_code_field);
    const auto parent_col = sql::quote_ident(*a.ptable_parent_field);
    const auto& [want, have] = children ? std::pair(code_col, parent_col) : std::pair(parent_col, code_col);
    return "SELECT " + want + " FROM " + sql::quote_ident(*a.parent_table) + " WHERE " + have + " = ?1";
  }

  sql::Statement children_;
  sql::Statement parents_;
  std::size_t lookups_ = 0;
};

namespace detail {

inline void require_code(StoreHandle& handle, const DictionaryAdapter& adapter, std::string_view code) {
  if (!code_exists(handle, adapter, code))
    throw Error(ErrorKind::UnknownCode, "'" + std::string(code) + "' is not in " + adapter.kind);
}

inline char pad_of(const DictionaryAdapter& adapter) { return adapter.padded ? adapter.pad_char : '\0'; }

}  // namespace detail

inline ClosureResult relation_closure(StoreHandle& handle, const DictionaryAdapter& adapter, std::string_view code,
                                      Direction direction, bool immediate_only = false) {
  const bool dag = adapter.relation_strategy == RelationStrategy::Dag;
  require_schema(handle, adapter, dag);
  detail::require_code(handle, adapter, code);
  if (dag) {
    StoreLinkLookup lookup(handle, adapter);
    return dag_closure(lookup, code, direction, immediate_only);
  }
  ClosureResult result;
  result.expansions = 1;
  const char pad = detail::pad_of(adapter);
  if (direction == Direction::Descendants) {
    const auto base = strip_padding(code, pad);
    result.codes = prefix_children(codes_with_prefix(handle, adapter, base), code, immediate_only, pad);
  } else {
    for (auto& p : prefix_parent(code, immediate_only, pad, adapter.root_code))
      if (code_exists(handle, adapter, p)) result.codes.push_back(std::move(p));
  }
  return result;
}

/// All descendants of `code` (or only immediate children), ascending.
inline std::vector<std::string> get_child_codes(StoreHandle& handle, const DictionaryAdapter& adapter,
                                                std::string_view code, bool immediate_only = false) {
  return relation_closure(handle, adapter, code, Direction::Descendants, immediate_only).codes;
}

/// All ancestors of `code` (or only immediate parents), ascending.
inline std::vector<std::string> get_parent_codes(StoreHandle& handle, const DictionaryAdapter& adapter,
                                                 std::string_view code, bool immediate_only = false) {
  return relation_closure(handle, adapter, code, Direction::Ancestors, immediate_only).codes;
}

}  // namespace termforge
