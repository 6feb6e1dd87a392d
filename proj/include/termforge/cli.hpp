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

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "termforge/config.hpp"
#include "termforge/error.hpp"
#include "termforge/ingest.hpp"
#include "termforge/model.hpp"
#include "termforge/query.hpp"
#include "termforge/relations.hpp"
#include "termforge/store.hpp"

namespace termforge::cli {

inline constexpr const char* kConfigEnv = "TERMFORGE_CONFIG";

// Exit status table. Keep README in sync.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kNotFound = 2,
  kAlreadyBuilt = 3,
  kUnknownCode = 4,
  kQueryError = 5,
  kDataError = 6,
  kStoreError = 7,
  kConfigError = 8,
  kDictionaryError = 9,
  kInternal = 10,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return kNotFound;
    case ErrorKind::AlreadyBuilt: return kAlreadyBuilt;
    case ErrorKind::UnknownCode: return kUnknownCode;
    case ErrorKind::SyntaxError:
    case ErrorKind::UnknownField: return kQueryError;
    case ErrorKind::InvalidBundle:
    case ErrorKind::MalformedRow:
    case ErrorKind::MissingColumn:
    case ErrorKind::CodeWidthError:
    case ErrorKind::DanglingParent:
    case ErrorKind::DuplicateRecord:
    case ErrorKind::PreferredTermError:
    case ErrorKind::CycleDetected: return kDataError;
    case ErrorKind::PermissionDenied:
    case ErrorKind::CorruptStore:
    case ErrorKind::StoreBusy:
    case ErrorKind::AlreadyExists:
    case ErrorKind::SchemaMissing:
    case ErrorKind::UnknownBackend:
    case ErrorKind::StoreError: return kStoreError;
    case ErrorKind::BadJson:
    case ErrorKind::MissingKey: return kConfigError;
    case ErrorKind::UnknownKind:
    case ErrorKind::DuplicateKind:
    case ErrorKind::InvalidAdapter: return kDictionaryError;
    case ErrorKind::InjectedFault: return kInternal;
  }
  return kInternal;
}

struct Options {
  std::string dict_type;
  std::string config_path;
  std::string config_home;
  std::string db_type = "sqlite";
  std::string db_name;

  std::string source;
  bool overwrite = false;
  bool lenient = false;

  std::string where;
  std::string output = "rows";
  bool include_synonyms = false;
  bool case_sensitive = false;

  std::string code;
  bool immediate = false;
};

/// --config, then --config-home, then --db-name, then $TERMFORGE_CONFIG.
inline CliConfig resolve_config(const Options& o) {
  if (!o.config_path.empty()) return config_from_file(o.dict_type, o.config_path);
  if (!o.config_home.empty()) return config_from_home(o.dict_type, o.config_home);
  if (!o.db_name.empty()) return config_from_pairs(o.dict_type, {"type=" + o.db_type, "dbname=" + o.db_name});
  if (const char* env = std::getenv(kConfigEnv); env && *env) return config_from_file(o.dict_type, env);
  throw Error(ErrorKind::MissingKey, "dbname (use --config, --config-home, --db-name or " + std::string(kConfigEnv) + ")");
}

inline void print_lines(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << l << '\n';
}

inline int cmd_build(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  const auto adapter = resolve_adapter(cfg.dict_type);
  auto bundle = make_bundle(adapter, o.source);
  auto store = open_store(cfg.store, OpenMode::ReadWrite);
  BuildOptions options;
  options.overwrite = o.overwrite;
  options.lenient = o.lenient;
  out << report_text(build_concept_tables(store, adapter, bundle, options));
  return kOk;
}

inline int cmd_search(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  const auto adapter = resolve_adapter(cfg.dict_type);
  const auto mode = parse_output_mode(o.output);
  const auto predicate = parse_predicate(o.where, adapter);
  auto store = open_store(cfg.store, OpenMode::ReadOnly);
  set_case_sensitivity(store, o.case_sensitive);
  auto result = search_concepts(store, adapter, predicate, o.include_synonyms, *mode);
  if (result.mode == OutputMode::Rows) {
    const auto schema = adapter_schema(adapter);
    out << tsv_header(schema) << '\n';
    for (const auto& r : result.rows) out << tsv_row(r, schema) << '\n';
  } else {
    print_lines(out, result.values);
  }
  return kOk;
}

inline int cmd_relatives(const Options& o, std::ostream& out, Direction direction) {
  const auto cfg = resolve_config(o);
  const auto adapter = resolve_adapter(cfg.dict_type);
  auto store = open_store(cfg.store, OpenMode::ReadOnly);
  print_lines(out, relation_closure(store, adapter, o.code, direction, o.immediate).codes);
  return kOk;
}

inline void report_error(const Error& e, const Options& o, std::ostream& err) {
  err << e.what() << '\n';
  std::optional<std::size_t> caret;
  if (const auto* se = dynamic_cast<const SyntaxError*>(&e)) caret = se->position();
  if (const auto* fe = dynamic_cast<const UnknownFieldError*>(&e)) caret = fe->position();
  if (caret && !o.where.empty()) err << "  " << o.where << '\n' << "  " << std::string(*caret, ' ') << "^\n";
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Build and query clinical terminology stores"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--dict-type", o.dict_type, "Dictionary kind (NHSReadV2, NHSReadV3, NHSICD10, NHSSnomedCT)")
      ->required();
  auto* cfg_file = app.add_option("--config", o.config_path, "Path to a JSON store config");
  auto* cfg_home = app.add_option("--config-home", o.config_home, "JSON store config relative to $HOME");
  app.add_option("--db-type", o.db_type, "Store backend for inline configuration")->capture_default_str();
  auto* db_name = app.add_option("--db-name", o.db_name, "Store file for inline configuration");
  cfg_file->excludes(cfg_home)->excludes(db_name);
  cfg_home->excludes(db_name);

  auto* build = app.add_subcommand("build", "Load a source directory into the store");
  build->add_option("--source", o.source, "Directory holding concepts.tsv (and parents.tsv)")->required();
  build->add_flag("--overwrite", o.overwrite, "Replace an existing build");
  build->add_flag("--lenient", o.lenient, "Report malformed rows instead of aborting");

  auto* search = app.add_subcommand("search", "Search concepts with a predicate");
  search->add_option("--where", o.where, "Predicate, e.g. 'term like \"%asthma%\"'")->required();
  search->add_option("--output", o.output, "rows, terms or codes")
      ->check(CLI::IsMember({"rows", "terms", "codes"}))
      ->capture_default_str();
  search->add_flag("--include-synonyms", o.include_synonyms, "Include synonym terms");
  search->add_flag("--case-sensitive", o.case_sensitive, "Compare strings case-sensitively");

  auto* children = app.add_subcommand("children", "List descendant codes");
  auto* parents = app.add_subcommand("parents", "List ancestor codes");
  for (auto* sub : {children, parents}) {
    sub->add_option("--code", o.code, "Concept code")->required();
    sub->add_flag("--immediate", o.immediate, "Only one level");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return cmd_build(o, out);
    if (*search) return cmd_search(o, out);
    if (*children) return cmd_relatives(o, out, Direction::Descendants);
    if (*parents) return cmd_relatives(o, out, Direction::Ancestors);
  } catch (const Error& e) {
    report_error(e, o, err);
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace termforge::cli
