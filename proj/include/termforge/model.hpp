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
#include <cctype>
#include <compare>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "termforge/error.hpp"

namespace termforge {

namespace kinds {
inline constexpr std::string_view ReadV2 = "NHSReadV2";
inline constexpr std::string_view ReadV3 = "NHSReadV3";
inline constexpr std::string_view ICD10 = "NHSICD10";
inline constexpr std::string_view SnomedCT = "NHSSnomedCT";
}  // namespace kinds

enum class RelationStrategy { PrefixHierarchy, Dag };

/// What a column means. Each built-in role maps onto one ConceptRecord slot;
/// `Text` columns land in ConceptRecord::extra under the column name.
enum class FieldRole {
  Code,
  Term,
  TermId,
  Synonym,
  Status,
  Term30,
  Term60,
  Term198,
  Description,
  Modifier4,
  Modifier5,
  TreeDescription,
  Text,
};

enum class Status { Current, Redundant, Optional, Extinct };

inline char status_char(Status s) {
  switch (s) {
    case Status::Current: return 'C';
    case Status::Redundant: return 'R';
    case Status::Optional: return 'O';
    case Status::Extinct: return 'E';
  }
  return '?';
}

inline std::optional<Status> parse_status(std::string_view text) {
  if (text == "C") return Status::Current;
  if (text == "R") return Status::Redundant;
  if (text == "O") return Status::Optional;
  if (text == "E") return Status::Extinct;
  return std::nullopt;
}

struct FieldSpec {
  std::string name;
  FieldRole role = FieldRole::Text;

  bool operator==(const FieldSpec&) const = default;
};

struct DictionaryAdapter {
  std::string kind;

  std::string concept_table;
  std::string code_field;
  std::string term_field;

  std::optional<std::string> parent_table;
  std::optional<std::string> ptable_code_field;
  std::optional<std::string> ptable_parent_field;

  RelationStrategy relation_strategy = RelationStrategy::PrefixHierarchy;

  // Code shape. Padded codes are exactly `code_length` wide with trailing
  // `pad_char`s; unpadded codes are between min_code_length and code_length.
  std::size_t code_length = 5;
  std::size_t min_code_length = 1;
  bool padded = true;
  char pad_char = '.';
  bool numeric_codes = false;

  std::vector<FieldSpec> extra_fields;
  std::optional<std::string> root_code;

  // When set, the term column is derived from description + modifiers.
  bool compose_icd10_terms = false;

  bool operator==(const DictionaryAdapter&) const = default;
};

struct ConceptRecord {
  std::string code;
  std::string term;
  bool synonym = false;
  std::optional<Status> status;
  std::optional<std::string> term_id;
  std::optional<std::string> term_30;
  std::optional<std::string> term_60;
  std::optional<std::string> term_198;
  std::optional<std::string> description;
  std::optional<std::string> modifier_4;
  std::optional<std::string> modifier_5;
  std::optional<std::string> tree_description;
  std::map<std::string, std::string> extra;

  auto operator<=>(const ConceptRecord&) const = default;
};

struct ParentLink {
  std::string code;
  std::string parent_code;

  auto operator<=>(const ParentLink&) const = default;
};

struct SchemaInfo {
  std::string table;
  std::vector<FieldSpec> columns;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    return std::nullopt;
  }

  const FieldSpec* find_role(FieldRole role) const {
    for (const auto& c : columns)
      if (c.role == role) return &c;
    return nullptr;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c.name);
    return out;
  }

  bool operator==(const SchemaInfo&) const = default;
};

inline SchemaInfo adapter_schema(const DictionaryAdapter& adapter) {
  SchemaInfo info;
  info.table = adapter.concept_table;
  info.columns.push_back({adapter.code_field, FieldRole::Code});
  info.columns.push_back({adapter.term_field, FieldRole::Term});
  info.columns.insert(info.columns.end(), adapter.extra_fields.begin(), adapter.extra_fields.end());
  return info;
}

inline bool has_synonyms(const DictionaryAdapter& adapter) {
  return std::any_of(adapter.extra_fields.begin(), adapter.extra_fields.end(),
                     [](const FieldSpec& f) { return f.role == FieldRole::Synonym; });
}

inline bool has_term_id(const DictionaryAdapter& adapter) {
  return std::any_of(adapter.extra_fields.begin(), adapter.extra_fields.end(),
                     [](const FieldSpec& f) { return f.role == FieldRole::TermId; });
}

// ---------------------------------------------------------------------------
// Field access by column. Absent optionals read back as "".

namespace detail {

inline const std::optional<std::string>* optional_slot(const ConceptRecord& rec, FieldRole role) {
  switch (role) {
    case FieldRole::TermId: return &rec.term_id;
    case FieldRole::Term30: return &rec.term_30;
    case FieldRole::Term60: return &rec.term_60;
    case FieldRole::Term198: return &rec.term_198;
    case FieldRole::Description: return &rec.description;
    case FieldRole::Modifier4: return &rec.modifier_4;
    case FieldRole::Modifier5: return &rec.modifier_5;
    case FieldRole::TreeDescription: return &rec.tree_description;
    default: return nullptr;
  }
}

inline std::optional<std::string>* optional_slot(ConceptRecord& rec, FieldRole role) {
  return const_cast<std::optional<std::string>*>(
      optional_slot(static_cast<const ConceptRecord&>(rec), role));
}

}  // namespace detail

inline std::string field_text(const ConceptRecord& rec, const FieldSpec& field) {
  switch (field.role) {
    case FieldRole::Code: return rec.code;
    case FieldRole::Term: return rec.term;
    case FieldRole::Synonym: return rec.synonym ? "1" : "0";
    case FieldRole::Status: return rec.status ? std::string(1, status_char(*rec.status)) : std::string();
    case FieldRole::Text: {
      auto it = rec.extra.find(field.name);
      return it == rec.extra.end() ? std::string() : it->second;
    }
    default: {
      const auto* slot = detail::optional_slot(rec, field.role);
      return (slot && *slot) ? **slot : std::string();
    }
  }
}

/// Stores `text` into the slot for `field`. Returns a reason on failure.
inline std::optional<std::string> set_field_text(ConceptRecord& rec, const FieldSpec& field,
                                                 std::string_view text) {
  switch (field.role) {
    case FieldRole::Code: rec.code = text; return std::nullopt;
    case FieldRole::Term: rec.term = text; return std::nullopt;
    case FieldRole::Synonym:
      if (text == "0") rec.synonym = false;
      else if (text == "1") rec.synonym = true;
      else return "synonym must be 0 or 1, got '" + std::string(text) + "'";
      return std::nullopt;
    case FieldRole::Status:
      if (text.empty()) {
        rec.status.reset();
        return std::nullopt;
      }
      if (auto s = parse_status(text)) {
        rec.status = *s;
        return std::nullopt;
      }
      return "status must be one of C, R, O, E, got '" + std::string(text) + "'";
    case FieldRole::Text:
      if (text.empty()) rec.extra.erase(field.name);
      else rec.extra[field.name] = std::string(text);
      return std::nullopt;
    default: {
      auto* slot = detail::optional_slot(rec, field.role);
      if (text.empty()) slot->reset();
      else *slot = std::string(text);
      return std::nullopt;
    }
  }
}

// ---------------------------------------------------------------------------
// Code shape

inline std::string_view significant_prefix(const DictionaryAdapter& adapter, std::string_view code) {
  if (!adapter.padded) return code;
  auto end = code.find_last_not_of(adapter.pad_char);
  return end == std::string_view::npos ? code.substr(0, 0) : code.substr(0, end + 1);
}

/// Returns a reason when `code` does not have the adapter's shape.
inline std::optional<std::string> code_shape_problem(const DictionaryAdapter& adapter,
                                                     std::string_view code) {
  const std::string quoted = "'" + std::string(code) + "'";
  if (adapter.padded) {
    if (code.size() != adapter.code_length)
      return "code " + quoted + " must be exactly " + std::to_string(adapter.code_length) +
             " characters";
    if (adapter.relation_strategy == RelationStrategy::PrefixHierarchy) {
      auto first_pad = code.find(adapter.pad_char);
      if (first_pad != std::string_view::npos &&
          code.find_first_not_of(adapter.pad_char, first_pad) != std::string_view::npos)
        return "code " + quoted + " has padding before significant characters";
    }
  } else if (code.size() < adapter.min_code_length || code.size() > adapter.code_length) {
    return "code " + quoted + " must be " + std::to_string(adapter.min_code_length) + "-" +
           std::to_string(adapter.code_length) + " characters";
  }
  for (char c : code) {
    auto u = static_cast<unsigned char>(c);
    if (adapter.numeric_codes ? !std::isdigit(u) : (u <= 0x20 || u == 0x7f))
      return "code " + quoted + " contains an invalid character";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

inline void validate_adapter(const DictionaryAdapter& a) {
  auto fail = [&](const std::string& why) { throw Error(ErrorKind::InvalidAdapter, a.kind + ": " + why); };

  if (a.kind.empty()) fail("kind name is empty");
  for (const auto* id : {&a.concept_table, &a.code_field, &a.term_field})
    if (!is_identifier(*id)) fail("'" + *id + "' is not a valid identifier");

  const bool has_ptable = a.parent_table && a.ptable_code_field && a.ptable_parent_field;
  const bool any_ptable = a.parent_table || a.ptable_code_field || a.ptable_parent_field;
  if (a.relation_strategy == RelationStrategy::Dag && !has_ptable)
    fail("DAG strategy requires parent_table, ptable_code_field and ptable_parent_field");
  if (a.relation_strategy == RelationStrategy::PrefixHierarchy && any_ptable)
    fail("prefix hierarchy must not declare a parent table");
  if (has_ptable) {
    for (const auto* id : {&*a.parent_table, &*a.ptable_code_field, &*a.ptable_parent_field})
      if (!is_identifier(*id)) fail("'" + *id + "' is not a valid identifier");
    if (*a.ptable_code_field == *a.ptable_parent_field) fail("parent table fields must differ");
    if (*a.parent_table == a.concept_table) fail("parent table must differ from concept table");
  }

  if (a.code_length < 1) fail("code_length must be at least 1");
  if (!a.padded && (a.min_code_length < 1 || a.min_code_length > a.code_length))
    fail("min_code_length must be in [1, code_length]");

  std::vector<std::string> names{a.code_field, a.term_field};
  std::vector<FieldRole> roles;
  for (const auto& f : a.extra_fields) {
    if (!is_identifier(f.name)) fail("'" + f.name + "' is not a valid identifier");
    if (f.role == FieldRole::Code || f.role == FieldRole::Term)
      fail("extra field '" + f.name + "' cannot take the code or term role");
    if (std::find(names.begin(), names.end(), f.name) != names.end())
      fail("duplicate column '" + f.name + "'");
    if (f.role != FieldRole::Text && std::find(roles.begin(), roles.end(), f.role) != roles.end())
      fail("role of '" + f.name + "' is already taken by another column");
    names.push_back(f.name);
    roles.push_back(f.role);
  }
  if (a.compose_icd10_terms) {
    auto has = [&](FieldRole r) { return std::find(roles.begin(), roles.end(), r) != roles.end(); };
    if (!has(FieldRole::Description) || !has(FieldRole::Modifier4) || !has(FieldRole::Modifier5))
      fail("term composition needs description, modifier 4 and modifier 5 columns");
  }
  if (a.root_code) {
    if (auto why = code_shape_problem(a, *a.root_code)) fail("root code: " + *why);
  }
}

// ---------------------------------------------------------------------------
// Built-in adapters

inline DictionaryAdapter readv2_adapter() {
  DictionaryAdapter a;
  a.kind = std::string(kinds::ReadV2);
  a.concept_table = "readv2_concept";
  a.code_field = "read_code";
  a.term_field = "term";
  a.relation_strategy = RelationStrategy::PrefixHierarchy;
  a.code_length = 5;
  return a;
}

inline DictionaryAdapter readv3_adapter() {
  DictionaryAdapter a;
  a.kind = std::string(kinds::ReadV3);
  a.concept_table = "readv3_concept";
  a.code_field = "read_code";
  a.term_field = "term";
  a.parent_table = "readv3_concept_parents";
  a.ptable_code_field = "read_code";
  a.ptable_parent_field = "parent_code";
  a.relation_strategy = RelationStrategy::Dag;
  a.code_length = 5;
  a.extra_fields = {{"term_30", FieldRole::Term30},   {"term_60", FieldRole::Term60},
                    {"term_198", FieldRole::Term198}, {"term_id", FieldRole::TermId},
                    {"synonym", FieldRole::Synonym},  {"status", FieldRole::Status}};
  a.root_code = ".....";
  return a;
}

inline DictionaryAdapter icd10_adapter() {
  DictionaryAdapter a;
  a.kind = std::string(kinds::ICD10);
  a.concept_table = "icd10_concept";
  a.code_field = "icd10_code";
  a.term_field = "term";
  a.relation_strategy = RelationStrategy::PrefixHierarchy;
  a.code_length = 5;
  a.min_code_length = 3;
  a.padded = false;
  a.extra_fields = {{"description", FieldRole::Description},
                    {"modifier_4", FieldRole::Modifier4},
                    {"modifier_5", FieldRole::Modifier5},
                    {"tree_description", FieldRole::TreeDescription}};
  a.compose_icd10_terms = true;
  return a;
}

inline DictionaryAdapter snomedct_adapter() {
  DictionaryAdapter a;
  a.kind = std::string(kinds::SnomedCT);
  a.concept_table = "snomed_concept";
  a.code_field = "snomed_code";
  a.term_field = "term";
  a.parent_table = "snomed_concept_parents";
  a.ptable_code_field = "snomed_code";
  a.ptable_parent_field = "parent_code";
  a.relation_strategy = RelationStrategy::Dag;
  a.code_length = 18;
  a.min_code_length = 6;
  a.padded = false;
  a.numeric_codes = true;
  a.extra_fields = {{"term_id", FieldRole::TermId},
                    {"synonym", FieldRole::Synonym},
                    {"status", FieldRole::Status}};
  return a;
}

// ---------------------------------------------------------------------------
// Registry

/// Maps dictionary kind names to adapters. Writes happen during start-up or
/// extension registration; lookups may come from any thread afterwards.
class AdapterRegistry {
 public:
  AdapterRegistry() {
    for (auto& a : {readv2_adapter(), readv3_adapter(), icd10_adapter(), snomedct_adapter()})
      add(a);
  }

  void add(const DictionaryAdapter& adapter) {
    validate_adapter(adapter);
    std::unique_lock lock(mutex_);
    if (adapters_.count(adapter.kind))
      throw Error(ErrorKind::DuplicateKind, "'" + adapter.kind + "' is already registered");
    adapters_.emplace(adapter.kind, adapter);
  }

  DictionaryAdapter resolve(std::string_view kind) const {
    std::shared_lock lock(mutex_);
    auto it = adapters_.find(std::string(kind));
    if (it == adapters_.end()) {
      std::string known;
      for (const auto& [name, _] : adapters_) known += " " + name;
      throw Error(ErrorKind::UnknownKind, "'" + std::string(kind) + "'; registered:" + known);
    }
    return it->second;
  }

  std::vector<std::string> kind_names() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : adapters_) out.push_back(name);
    return out;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, DictionaryAdapter, std::less<>> adapters_;
};

inline AdapterRegistry& registry() {
  static AdapterRegistry instance;
  return instance;
}

inline void register_adapter(const DictionaryAdapter& adapter) { registry().add(adapter); }

inline DictionaryAdapter resolve_adapter(std::string_view kind_name) {
  return registry().resolve(kind_name);
}

}  // namespace termforge
