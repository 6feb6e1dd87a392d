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
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "termforge/error.hpp"
#include "termforge/model.hpp"
#include "termforge/store.hpp"
#include "termforge/text.hpp"

// Interchange format
// ------------------
// A source directory holds `concepts.tsv` and, for DAG dictionaries,
// `parents.tsv`. Both are UTF-8, tab separated, LF terminated, with one
// mandatory header line. concepts.tsv columns are exactly adapter_schema()
// order; parents.tsv columns are `code<TAB>parent_code`. An empty cell means
// the optional field is absent; synonym is 0/1. A zero-byte file is an empty
// table.

namespace termforge {

inline constexpr std::string_view kConceptsFile = "concepts.tsv";
inline constexpr std::string_view kParentsFile = "parents.tsv";

struct SourceBundle {
  std::filesystem::path root_dir;
  std::filesystem::path concepts_file;
  std::optional<std::filesystem::path> parents_file;
};

/// Locates the interchange files under `root_dir`. Throws NotFound.
inline SourceBundle make_bundle(const DictionaryAdapter& adapter, const std::filesystem::path& root_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root_dir, ec)) throw Error(ErrorKind::NotFound, "source directory " + root_dir.string());
  SourceBundle bundle{root_dir, root_dir / kConceptsFile, std::nullopt};
  if (!fs::is_regular_file(bundle.concepts_file, ec))
    throw Error(ErrorKind::NotFound, bundle.concepts_file.string());
  if (adapter.relation_strategy == RelationStrategy::Dag) {
    bundle.parents_file = root_dir / kParentsFile;
    if (!fs::is_regular_file(*bundle.parents_file, ec))
      throw Error(ErrorKind::NotFound, bundle.parents_file->string());
  }
  return bundle;
}

inline void validate_bundle(const DictionaryAdapter& adapter, const SourceBundle& bundle) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_regular_file(bundle.concepts_file, ec)) throw Error(ErrorKind::NotFound, bundle.concepts_file.string());
  const bool dag = adapter.relation_strategy == RelationStrategy::Dag;
  if (dag && !bundle.parents_file)
    throw Error(ErrorKind::InvalidBundle, adapter.kind + " needs a parents file");
  if (!dag && bundle.parents_file)
    throw Error(ErrorKind::InvalidBundle, adapter.kind + " is a prefix hierarchy and takes no parents file");
  if (bundle.parents_file && !fs::is_regular_file(*bundle.parents_file, ec))
    throw Error(ErrorKind::NotFound, bundle.parents_file->string());
}

/// Term for an ICD-10 row: the description, followed by the 4th- and
/// 5th-character modifiers when the code is long enough and they are set.
inline std::string compose_icd10_term(std::string_view description, const std::optional<std::string>& modifier_4,
                                      const std::optional<std::string>& modifier_5, std::string_view code) {
  std::string term(description);
  if (code.size() >= 4 && modifier_4 && !modifier_4->empty()) term += " " + *modifier_4;
  if (code.size() >= 5 && modifier_5 && !modifier_5->empty()) term += " " + *modifier_5;
  return term;
}

// ---------------------------------------------------------------------------
// TSV

struct TsvLine {
  std::size_t number = 0;  // 1-based
  std::string text;
};

/// Reads all lines; a final LF does not start a new line.
inline std::vector<TsvLine> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, path.string());
  std::vector<TsvLine> lines;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) lines.push_back({++n, std::move(line)});
  return lines;
}

inline std::string tsv_header(const SchemaInfo& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) out += '\t';
    out += schema.columns[i].name;
  }
  return out;
}

/// One concepts.tsv line for `rec`, without the trailing LF.
inline std::string tsv_row(const ConceptRecord& rec, const SchemaInfo& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) out += '\t';
    out += field_text(rec, schema.columns[i]);
  }
  return out;
}

namespace detail {

inline void check_header(const std::filesystem::path& file, const TsvLine& header,
                         const std::vector<std::string>& expected) {
  const auto got = text::split(header.text, '\t');
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= got.size() || got[i] != expected[i])
      throw RowError(ErrorKind::MissingColumn, file.string(), header.number,
                     "expected column '" + expected[i] + "' at position " + std::to_string(i + 1) +
                         (i < got.size() ? ", found '" + std::string(got[i]) + "'" : std::string()));
  }
  if (got.size() != expected.size())
    throw RowError(ErrorKind::MalformedRow, file.string(), header.number,
                   "unexpected column '" + std::string(got[expected.size()]) + "'");
}

inline std::optional<std::string> line_problem(std::string_view line, std::size_t width,
                                               std::vector<std::string_view>& cells) {
  if (line.find('\r') != std::string_view::npos) return "carriage return in line";
  if (!text::valid_utf8(line)) return "invalid UTF-8";
  cells = text::split(line, '\t');
  if (cells.size() != width)
    return "expected " + std::to_string(width) + " fields, found " + std::to_string(cells.size());
  return std::nullopt;
}

}  // namespace detail

struct ParseOptions {
  /// Collect row-level problems as rejects instead of aborting.
  bool lenient = false;
};

struct RejectedRow {
  std::string file;
  std::size_t line = 0;
  ErrorKind kind = ErrorKind::MalformedRow;
  std::string reason;
};

struct ParsedSource {
  std::vector<ConceptRecord> records;
  std::vector<ParentLink> links;
  std::vector<RejectedRow> rejects;
  std::size_t concept_rows = 0;  // data lines read from concepts.tsv
  std::size_t link_rows = 0;     // data lines read from parents.tsv
};

/// Parses and validates a source bundle against the adapter's schema.
/// Strict mode throws RowError on the first bad row; lenient mode records it
/// in `rejects` and moves on. Structural problems (missing header columns,
/// a code with no preferred term) always throw.
inline ParsedSource parse_source(const DictionaryAdapter& adapter, const SourceBundle& bundle,
                                 const ParseOptions& options = {}) {
  validate_bundle(adapter, bundle);
  const auto schema = adapter_schema(adapter);
  const auto width = schema.columns.size();
  ParsedSource out;

  auto reject = [&](ErrorKind kind, const std::filesystem::path& file, std::size_t line, const std::string& why) {
    if (!options.lenient) throw RowError(kind, file.string(), line, why);
    out.rejects.push_back({file.string(), line, kind, why});
  };

  // concepts
  const auto& cfile = bundle.concepts_file;
  auto lines = read_lines(cfile);
  std::set<std::pair<std::string, std::string>> keys;
  std::map<std::string, std::size_t> preferred_line;  // code -> line of its non-synonym record
  std::set<std::string> codes;
  const bool keyed_by_term_id = has_term_id(adapter);
  const bool synonyms = has_synonyms(adapter);
  if (!lines.empty()) {
    detail::check_header(cfile, lines.front(), schema.names());
    std::vector<std::string_view> cells;
    for (std::size_t li = 1; li < lines.size(); ++li) {
      const auto& line = lines[li];
      ++out.concept_rows;
      if (auto why = detail::line_problem(line.text, width, cells)) {
        reject(ErrorKind::MalformedRow, cfile, line.number, *why);
        continue;
      }
      ConceptRecord rec;
      std::optional<std::string> problem;
      for (std::size_t c = 0; c < width && !problem; ++c) problem = set_field_text(rec, schema.columns[c], cells[c]);
      if (problem) {
        reject(ErrorKind::MalformedRow, cfile, line.number, *problem);
        continue;
      }
      if (auto why = code_shape_problem(adapter, rec.code)) {
        reject(ErrorKind::CodeWidthError, cfile, line.number, *why);
        continue;
      }
      if (adapter.compose_icd10_terms) {
        if (!rec.description || rec.description->empty()) {
          reject(ErrorKind::MalformedRow, cfile, line.number, "empty description");
          continue;
        }
        auto composed = compose_icd10_term(*rec.description, rec.modifier_4, rec.modifier_5, rec.code);
        if (!rec.term.empty() && rec.term != composed) {
          reject(ErrorKind::MalformedRow, cfile, line.number,
                 "term '" + rec.term + "' disagrees with composed term '" + composed + "'");
          continue;
        }
        rec.term = std::move(composed);
      }
      if (rec.term.empty()) {
        reject(ErrorKind::MalformedRow, cfile, line.number, "empty term");
        continue;
      }
      std::pair<std::string, std::string> key{rec.code, keyed_by_term_id && rec.term_id ? "id:" + *rec.term_id
                                                                                       : "term:" + rec.term};
      if (keys.count(key)) {
        reject(ErrorKind::DuplicateRecord, cfile, line.number,
               "duplicate record for code '" + rec.code + "' (" + key.second + ")");
        continue;
      }
      if (synonyms && !rec.synonym) {
        if (auto it = preferred_line.find(rec.code); it != preferred_line.end()) {
          reject(ErrorKind::PreferredTermError, cfile, line.number,
                 "code '" + rec.code + "' already has a preferred term on line " + std::to_string(it->second));
          continue;
        }
        preferred_line.emplace(rec.code, line.number);
      }
      keys.insert(std::move(key));
      codes.insert(rec.code);
      out.records.push_back(std::move(rec));
    }
  }
  if (synonyms) {
    for (const auto& code : codes)
      if (!preferred_line.count(code))
        throw Error(ErrorKind::PreferredTermError,
                    cfile.string() + ": code '" + code + "' has synonyms but no preferred term");
  }

  // parent links
  if (bundle.parents_file) {
    const auto& pfile = *bundle.parents_file;
    auto plines = read_lines(pfile);
    if (!plines.empty()) {
      detail::check_header(pfile, plines.front(), {"code", "parent_code"});
      std::set<ParentLink> seen;
      std::vector<std::string_view> cells;
      for (std::size_t li = 1; li < plines.size(); ++li) {
        const auto& line = plines[li];
        ++out.link_rows;
        if (auto why = detail::line_problem(line.text, 2, cells)) {
          reject(ErrorKind::MalformedRow, pfile, line.number, *why);
          continue;
        }
        ParentLink link{std::string(cells[0]), std::string(cells[1])};
        std::optional<std::string> shape = code_shape_problem(adapter, link.code);
        if (!shape) shape = code_shape_problem(adapter, link.parent_code);
        if (shape) {
          reject(ErrorKind::CodeWidthError, pfile, line.number, *shape);
          continue;
        }
        if (link.code == link.parent_code)
          throw RowError(ErrorKind::CycleDetected, pfile.string(), line.number,
                         "code '" + link.code + "' is its own parent");
        for (const auto* c : {&link.code, &link.parent_code}) {
          if (!codes.count(*c)) {
            shape = "link references unknown code '" + *c + "'";
            break;
          }
        }
        if (shape) {
          reject(ErrorKind::DanglingParent, pfile, line.number, *shape);
          continue;
        }
        if (!seen.insert(link).second) {
          reject(ErrorKind::DuplicateRecord, pfile, line.number,
                 "duplicate link " + link.code + " -> " + link.parent_code);
          continue;
        }
        out.links.push_back(std::move(link));
      }
    }
  }
  return out;
}

/// Returns a code that lies on a directed cycle, if any (Kahn's algorithm).
inline std::optional<std::string> find_cycle(const std::vector<ParentLink>& links) {
  std::map<std::string_view, std::vector<std::string_view>> children;
  std::map<std::string_view, std::size_t> pending;  // unresolved parent count
  for (const auto& l : links) {
    children[l.parent_code].push_back(l.code);
    ++pending[l.code];
    pending.try_emplace(l.parent_code, 0);
  }
  std::queue<std::string_view> ready;
  for (const auto& [code, n] : pending)
    if (n == 0) ready.push(code);
  std::size_t resolved = 0;
  while (!ready.empty()) {
    auto code = ready.front();
    ready.pop();
    ++resolved;
    for (auto child : children[code])
      if (--pending[child] == 0) ready.push(child);
  }
  if (resolved == pending.size()) return std::nullopt;
  for (const auto& [code, n] : pending)
    if (n > 0) return std::string(code);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Build

struct BuildOptions {
  bool overwrite = false;
  bool lenient = false;
  /// Called with the running row index before each concept and link insert.
  /// Throwing from it aborts the build and rolls everything back.
  std::function<void(std::size_t)> row_hook;
};

struct BuildReport {
  std::size_t concepts = 0;
  std::size_t links = 0;
  std::size_t rejected = 0;
  std::size_t concept_rows = 0;
  std::size_t link_rows = 0;
  std::vector<RejectedRow> rejects;
};

inline std::string report_text(const BuildReport& r) {
  std::ostringstream os;
  os << "concepts\t" << r.concepts << "\nlinks\t" << r.links << "\nrejected\t" << r.rejected << "\n";
  for (const auto& rej : r.rejects)
    os << "reject\t" << rej.file << ":" << rej.line << "\t" << kind_name(rej.kind) << "\t" << rej.reason << "\n";
  return os.str();
}

/// Parses the bundle and loads it into the store in a single transaction.
/// Either every row lands or the store is left exactly as it was.
inline BuildReport build_concept_tables(StoreHandle& store, const DictionaryAdapter& adapter,
                                        const SourceBundle& bundle, const BuildOptions& options = {}) {
  if (!store.writable()) throw Error(ErrorKind::PermissionDenied, "store opened read-only");
  if (!options.overwrite && is_built(store, adapter))
    throw Error(ErrorKind::AlreadyBuilt, adapter.kind + " in " + store.config().dbname);

  auto parsed = parse_source(adapter, bundle, ParseOptions{options.lenient});
  if (auto code = find_cycle(parsed.links))
    throw Error(ErrorKind::CycleDetected, "parent links of " + adapter.kind + " form a cycle through '" + *code + "'");

  WriteTransaction tx(store);
  if (is_built(store, adapter)) {
    if (!options.overwrite) throw Error(ErrorKind::AlreadyBuilt, adapter.kind + " in " + store.config().dbname);
    initialize_schema(store, adapter, true);
  } else if (store.table_exists(adapter.concept_table)) {
    // initialized but never populated
    require_schema(store, adapter, adapter.relation_strategy == RelationStrategy::Dag);
    initialize_schema(store, adapter, true);
  } else {
    initialize_schema(store, adapter, false);
  }

  const auto schema = adapter_schema(adapter);
  std::string placeholders;
  for (std::size_t i = 0; i < schema.columns.size(); ++i) placeholders += (i ? ", ?" : "?") + std::to_string(i + 1);
  auto insert = store.prepare("INSERT INTO " + sql::quote_ident(adapter.concept_table) + " (" +
                              detail::select_columns(schema) + ") VALUES (" + placeholders + ")");
  std::size_t row = 0;
  BuildReport report;
  for (const auto& rec : parsed.records) {
    if (options.row_hook) options.row_hook(row);
    ++row;
    insert.reset();
    for (std::size_t i = 0; i < schema.columns.size(); ++i)
      insert.bind(static_cast<int>(i + 1), field_text(rec, schema.columns[i]));
    insert.step();
    ++report.concepts;
  }
  if (adapter.relation_strategy == RelationStrategy::Dag) {
    auto link_insert = store.prepare("INSERT INTO " + sql::quote_ident(*adapter.parent_table) + " (" +
                                     sql::quote_ident(*adapter.ptable_code_field) + ", " +
                                     sql::quote_ident(*adapter.ptable_parent_field) + ") VALUES (?1, ?2)");
    for (const auto& link : parsed.links) {
      if (options.row_hook) options.row_hook(row);
      ++row;
      link_insert.reset();
      link_insert.bind(1, link.code).bind(2, link.parent_code);
      link_insert.step();
      ++report.links;
    }
  }
  mark_built(store, adapter);
  tx.commit();

  report.rejected = parsed.rejects.size();
  report.concept_rows = parsed.concept_rows;
  report.link_rows = parsed.link_rows;
  report.rejects = std::move(parsed.rejects);
  return report;
}

inline BuildReport build_concept_tables(StoreHandle& store, const DictionaryAdapter& adapter,
                                        const std::filesystem::path& source_dir, const BuildOptions& options = {}) {
  return build_concept_tables(store, adapter, make_bundle(adapter, source_dir), options);
}

}  // namespace termforge
