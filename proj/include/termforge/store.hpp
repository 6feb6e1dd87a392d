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

#include <sqlite3.h>

#include <unistd.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "termforge/error.hpp"
#include "termforge/model.hpp"

namespace termforge {

/// Connection settings in the shape of the JSON config file. Only `type` and
/// `dbname` matter to the embedded backend; the rest is carried through so
/// config files written for a client/server setup still load.
struct StoreConfig {
  std::string type = "sqlite";
  std::string dbname;
  std::optional<std::string> user;
  std::optional<std::string> pass;
  std::optional<std::string> host;
  std::optional<std::string> port;

  bool operator==(const StoreConfig&) const = default;
};

enum class OpenMode { ReadOnly, ReadWrite };

namespace sql {

inline ErrorKind classify(int rc) {
  switch (rc & 0xff) {
    case SQLITE_CORRUPT:
    case SQLITE_NOTADB: return ErrorKind::CorruptStore;
    case SQLITE_BUSY:
    case SQLITE_LOCKED: return ErrorKind::StoreBusy;
    case SQLITE_PERM:
    case SQLITE_READONLY:
    case SQLITE_CANTOPEN:
    case SQLITE_AUTH: return ErrorKind::PermissionDenied;
    default: return ErrorKind::StoreError;
  }
}

[[noreturn]] inline void fail(sqlite3* db, int rc, std::string_view context) {
  std::string msg(context);
  msg += ": ";
  msg += db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
  throw Error(classify(rc), msg);
}

inline std::string quote_ident(std::string_view ident) {
  std::string out = "\"";
  for (char c : ident) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class Statement {
 public:
  Statement(sqlite3* db, std::string_view text) : db_(db) {
    sqlite3_stmt* raw = nullptr;
    int rc = sqlite3_prepare_v2(db, text.data(), static_cast<int>(text.size()), &raw, nullptr);
    if (rc != SQLITE_OK) fail(db, rc, "prepare");
    stmt_.reset(raw);
  }

  Statement& bind(int index, std::string_view value) {
    int rc = sqlite3_bind_text(stmt_.get(), index, value.data(), static_cast<int>(value.size()),
                               SQLITE_TRANSIENT);
    if (rc != SQLITE_OK) fail(db_, rc, "bind");
    return *this;
  }

  /// Advances one row; false once the statement is done.
  bool step() {
    int rc = sqlite3_step(stmt_.get());
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, rc, "step");
  }

  std::string_view text(int column) const {
    auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_.get(), column));
    int n = sqlite3_column_bytes(stmt_.get(), column);
    return p ? std::string_view(p, static_cast<std::size_t>(n)) : std::string_view();
  }

  std::int64_t integer(int column) const { return sqlite3_column_int64(stmt_.get(), column); }

  void reset() {
    sqlite3_reset(stmt_.get());
    sqlite3_clear_bindings(stmt_.get());
  }

 private:
  struct Finalizer {
    void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
  };
  sqlite3* db_;
  std::unique_ptr<sqlite3_stmt, Finalizer> stmt_;
};

/// Reads the fixed 100-byte file header and checks that the file is at least
/// as long as the page count it declares. Catches truncated copies without a
/// full integrity scan.
inline std::optional<std::string> header_problem(const std::filesystem::path& path) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  if (ec || size == 0) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 100> h{};
  if (size < h.size() || !in.read(reinterpret_cast<char*>(h.data()), h.size()))
    return "file is shorter than a store header";
  static constexpr char magic[] = "SQLite format 3";
  if (!std::equal(std::begin(magic), std::end(magic), h.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; }))
    return "bad file magic";
  auto be32 = [&](std::size_t off) {
    return (std::uint32_t{h[off]} << 24) | (std::uint32_t{h[off + 1]} << 16) |
           (std::uint32_t{h[off + 2]} << 8) | std::uint32_t{h[off + 3]};
  };
  std::uint64_t page_size = (std::uint32_t{h[16]} << 8) | h[17];
  if (page_size == 1) page_size = 65536;
  if (page_size < 512 || (page_size & (page_size - 1)) != 0) return "bad page size";
  const std::uint32_t change_counter = be32(24);
  const std::uint32_t page_count = be32(28);
  const std::uint32_t valid_for = be32(92);
  if (valid_for == change_counter && page_count > 0 && size < page_count * page_size)
    return "file is truncated (" + std::to_string(size) + " of " +
           std::to_string(page_count * page_size) + " bytes)";
  if (size % page_size != 0) return "file size is not a whole number of pages";
  return std::nullopt;
}

}  // namespace sql

inline constexpr std::string_view kMetaTable = "termforge_dictionaries";

/// One open connection to a store file. Move-only. Each thread should open
/// its own handle.
class StoreHandle {
 public:
  StoreHandle(StoreConfig config, OpenMode mode) : config_(std::move(config)), mode_(mode) {
    namespace fs = std::filesystem;
    if (config_.type != "sqlite")
      throw Error(ErrorKind::UnknownBackend, "'" + config_.type + "' (supported: sqlite)");
    if (config_.dbname.empty()) throw Error(ErrorKind::NotFound, "empty dbname");

    const fs::path path(config_.dbname);
    std::error_code ec;
    const bool exists = fs::exists(path, ec);
    if (mode_ == OpenMode::ReadOnly) {
      if (!exists) throw Error(ErrorKind::NotFound, config_.dbname);
      if (::access(path.c_str(), R_OK) != 0) throw Error(ErrorKind::PermissionDenied, config_.dbname);
    } else if (exists) {
      if (::access(path.c_str(), R_OK | W_OK) != 0)
        throw Error(ErrorKind::PermissionDenied, config_.dbname);
    } else if (path.has_parent_path()) {
      fs::create_directories(path.parent_path(), ec);
      if (ec || ::access(path.parent_path().c_str(), W_OK) != 0)
        throw Error(ErrorKind::PermissionDenied, "cannot create " + config_.dbname);
    }
    if (exists && fs::is_directory(path, ec))
      throw Error(ErrorKind::PermissionDenied, config_.dbname + " is a directory");
    if (exists) {
      if (auto why = sql::header_problem(path)) throw Error(ErrorKind::CorruptStore, config_.dbname + ": " + *why);
    }

    const int flags = (mode_ == OpenMode::ReadOnly ? SQLITE_OPEN_READONLY
                                                   : SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE) |
                      SQLITE_OPEN_NOMUTEX;
    sqlite3* raw = nullptr;
    int rc = sqlite3_open_v2(config_.dbname.c_str(), &raw, flags, nullptr);
    db_.reset(raw);
    if (rc != SQLITE_OK) sql::fail(raw, rc, "open " + config_.dbname);
    sqlite3_extended_result_codes(raw, 0);
    set_busy_timeout(1000);
    exec("PRAGMA schema_version");
    if (mode_ == OpenMode::ReadWrite) exec("PRAGMA journal_mode=DELETE");
  }

  StoreHandle(StoreHandle&&) noexcept = default;
  StoreHandle& operator=(StoreHandle&&) noexcept = default;

  const StoreConfig& config() const noexcept { return config_; }
  OpenMode mode() const noexcept { return mode_; }
  bool writable() const noexcept { return mode_ == OpenMode::ReadWrite; }

  bool case_sensitive() const noexcept { return case_sensitive_; }
  void set_case_sensitive(bool enabled) noexcept { case_sensitive_ = enabled; }

  void set_busy_timeout(int milliseconds) { sqlite3_busy_timeout(db_.get(), milliseconds); }

  void exec(std::string_view text) {
    const std::string owned(text);
    char* err = nullptr;
    int rc = sqlite3_exec(db_.get(), owned.c_str(), nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
      std::string msg = err ? err : sqlite3_errstr(rc);
      sqlite3_free(err);
      throw Error(sql::classify(rc), msg);
    }
  }

  sql::Statement prepare(std::string_view text) { return sql::Statement(db_.get(), text); }

  bool in_transaction() const { return sqlite3_get_autocommit(db_.get()) == 0; }

  bool table_exists(std::string_view name) {
    auto st = prepare("SELECT 1 FROM sqlite_master WHERE type='table' AND name=?1");
    st.bind(1, name);
    return st.step();
  }

  std::vector<std::string> table_columns(std::string_view name) {
    auto st = prepare("SELECT name FROM pragma_table_info(?1) ORDER BY cid");
    st.bind(1, name);
    std::vector<std::string> cols;
    while (st.step()) cols.emplace_back(st.text(0));
    return cols;
  }

  /// Runs a full integrity scan. Throws CorruptStore on any finding.
  void verify_integrity() {
    auto st = prepare("PRAGMA integrity_check");
    std::string findings;
    while (st.step()) {
      auto line = st.text(0);
      if (line != "ok") findings += std::string(line) + "; ";
    }
    if (!findings.empty()) throw Error(ErrorKind::CorruptStore, findings);
  }

 private:
  struct Closer {
    void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
  };

  StoreConfig config_;
  OpenMode mode_;
  bool case_sensitive_ = false;
  std::unique_ptr<sqlite3, Closer> db_;
};

inline StoreHandle open_store(const StoreConfig& config, OpenMode mode) {
  return StoreHandle(config, mode);
}

inline void set_case_sensitivity(StoreHandle& handle, bool enabled) { handle.set_case_sensitive(enabled); }

/// Scoped write transaction. The outermost scope takes the write lock up
/// front (BEGIN IMMEDIATE) so a competing writer fails fast with StoreBusy;
/// nested scopes become savepoints. Rolls back unless commit() ran.
class WriteTransaction {
 public:
  explicit WriteTransaction(StoreHandle& handle) : handle_(handle) {
    if (!handle_.writable()) throw Error(ErrorKind::PermissionDenied, "store opened read-only");
    nested_ = handle_.in_transaction();
    handle_.exec(nested_ ? "SAVEPOINT termforge_tx" : "BEGIN IMMEDIATE");
  }

  WriteTransaction(const WriteTransaction&) = delete;
  WriteTransaction& operator=(const WriteTransaction&) = delete;

  ~WriteTransaction() {
    if (done_) return;
    try {
      if (nested_) {
        handle_.exec("ROLLBACK TO termforge_tx");
        handle_.exec("RELEASE termforge_tx");
      } else {
        handle_.exec("ROLLBACK");
      }
    } catch (...) {
    }
  }

  void commit() {
    handle_.exec(nested_ ? "RELEASE termforge_tx" : "COMMIT");
    done_ = true;
  }

 private:
  StoreHandle& handle_;
  bool nested_ = false;
  bool done_ = false;
};

// ---------------------------------------------------------------------------
// Schema

namespace detail {

inline std::string order_clause(const DictionaryAdapter& adapter) {
  std::string order = sql::quote_ident(adapter.code_field);
  for (const auto& f : adapter.extra_fields)
    if (f.role == FieldRole::TermId) order += ", " + sql::quote_ident(f.name);
  order += ", " + sql::quote_ident(adapter.term_field);
  return order;
}

inline std::string select_columns(const SchemaInfo& schema) {
  std::string cols;
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) cols += ", ";
    cols += sql::quote_ident(schema.columns[i].name);
  }
  return cols;
}

inline void ensure_meta_table(StoreHandle& handle) {
  handle.exec("CREATE TABLE IF NOT EXISTS " + std::string(kMetaTable) +
              " (kind TEXT PRIMARY KEY, concept_table TEXT NOT NULL, parent_table TEXT,"
              " built INTEGER NOT NULL DEFAULT 0)");
}

inline std::optional<std::string> table_owner(StoreHandle& handle, std::string_view table) {
  if (!handle.table_exists(kMetaTable)) return std::nullopt;
  auto st = handle.prepare("SELECT kind FROM " + std::string(kMetaTable) +
                           " WHERE concept_table=?1 OR parent_table=?1");
  st.bind(1, table);
  if (st.step()) return std::string(st.text(0));
  return std::nullopt;
}

inline void drop_adapter_tables(StoreHandle& handle, const DictionaryAdapter& adapter) {
  handle.exec("DROP TABLE IF EXISTS " + sql::quote_ident(adapter.concept_table));
  if (adapter.parent_table) handle.exec("DROP TABLE IF EXISTS " + sql::quote_ident(*adapter.parent_table));
  if (handle.table_exists(kMetaTable)) {
    auto st = handle.prepare("DELETE FROM " + std::string(kMetaTable) + " WHERE kind=?1");
    st.bind(1, adapter.kind);
    st.step();
  }
}

}  // namespace detail

/// Whether this adapter has ever been successfully built into the store.
inline bool is_built(StoreHandle& handle, const DictionaryAdapter& adapter) {
  if (!handle.table_exists(kMetaTable)) return false;
  auto st = handle.prepare("SELECT built FROM " + std::string(kMetaTable) + " WHERE kind=?1");
  st.bind(1, adapter.kind);
  return st.step() && st.integer(0) != 0;
}

inline void mark_built(StoreHandle& handle, const DictionaryAdapter& adapter) {
  auto st = handle.prepare("UPDATE " + std::string(kMetaTable) + " SET built=1 WHERE kind=?1");
  st.bind(1, adapter.kind);
  st.step();
}

/// Creates the concept table (and parent table for DAG dictionaries) with
/// indexes. With `overwrite`, existing tables for this adapter are dropped.
inline void initialize_schema(StoreHandle& handle, const DictionaryAdapter& adapter, bool overwrite = false) {
  WriteTransaction tx(handle);
  std::vector<std::string> tables{adapter.concept_table};
  if (adapter.parent_table) tables.push_back(*adapter.parent_table);
  for (const auto& t : tables) {
    if (!handle.table_exists(t)) continue;
    auto owner = detail::table_owner(handle, t);
    if (!overwrite || !owner || *owner != adapter.kind)
      throw Error(ErrorKind::AlreadyExists,
                  "table '" + t + "'" + (owner ? " belongs to " + *owner : std::string()));
  }
  detail::drop_adapter_tables(handle, adapter);
  detail::ensure_meta_table(handle);

  const auto schema = adapter_schema(adapter);
  const auto table = sql::quote_ident(adapter.concept_table);
  std::string ddl = "CREATE TABLE " + table + " (";
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) ddl += ", ";
    ddl += sql::quote_ident(schema.columns[i].name) + " TEXT NOT NULL DEFAULT ''";
  }
  ddl += ")";
  handle.exec(ddl);
  handle.exec("CREATE INDEX " + sql::quote_ident(adapter.concept_table + "_code_idx") + " ON " + table + " (" +
              sql::quote_ident(adapter.code_field) + ")");
  // (code, term_id) is unique when term_id is set, (code, term) otherwise;
  // the triple covers both cases.
  std::string key_cols = sql::quote_ident(adapter.code_field);
  if (const auto* term_id = schema.find_role(FieldRole::TermId)) key_cols += ", " + sql::quote_ident(term_id->name);
  key_cols += ", " + sql::quote_ident(adapter.term_field);
  handle.exec("CREATE UNIQUE INDEX " + sql::quote_ident(adapter.concept_table + "_key_idx") + " ON " + table +
              " (" + key_cols + ")");

  if (adapter.relation_strategy == RelationStrategy::Dag) {
    const auto ptable = sql::quote_ident(*adapter.parent_table);
    const auto code_col = sql::quote_ident(*adapter.ptable_code_field);
    const auto parent_col = sql::quote_ident(*adapter.ptable_parent_field);
    handle.exec("CREATE TABLE " + ptable + " (" + code_col + " TEXT NOT NULL, " + parent_col +
                " TEXT NOT NULL, UNIQUE (" + code_col + ", " + parent_col + "))");
    handle.exec("CREATE INDEX " + sql::quote_ident(*adapter.parent_table + "_code_idx") + " ON " + ptable + " (" +
                code_col + ")");
    handle.exec("CREATE INDEX " + sql::quote_ident(*adapter.parent_table + "_parent_idx") + " ON " + ptable +
                " (" + parent_col + ")");
  }

  auto st = handle.prepare("INSERT INTO " + std::string(kMetaTable) +
                           " (kind, concept_table, parent_table, built) VALUES (?1, ?2, ?3, 0)");
  st.bind(1, adapter.kind).bind(2, adapter.concept_table);
  if (adapter.parent_table) st.bind(3, *adapter.parent_table);
  st.step();
  tx.commit();
}

/// Throws SchemaMissing unless the adapter's tables exist with the expected
/// columns and are registered to this dictionary kind.
inline void require_schema(StoreHandle& handle, const DictionaryAdapter& adapter, bool need_links = false) {
  auto missing = [&](const std::string& why) {
    throw Error(ErrorKind::SchemaMissing, adapter.kind + ": " + why + " in " + handle.config().dbname);
  };
  if (!handle.table_exists(adapter.concept_table)) missing("no table '" + adapter.concept_table + "'");
  if (auto owner = detail::table_owner(handle, adapter.concept_table); owner && *owner != adapter.kind)
    missing("table '" + adapter.concept_table + "' was built for " + *owner);
  if (handle.table_columns(adapter.concept_table) != adapter_schema(adapter).names())
    missing("table '" + adapter.concept_table + "' has unexpected columns");
  if (!need_links) return;
  if (adapter.relation_strategy != RelationStrategy::Dag) missing("dictionary has no parent table");
  if (!handle.table_exists(*adapter.parent_table)) missing("no table '" + *adapter.parent_table + "'");
  const std::vector<std::string> link_cols{*adapter.ptable_code_field, *adapter.ptable_parent_field};
  if (handle.table_columns(*adapter.parent_table) != link_cols)
    missing("table '" + *adapter.parent_table + "' has unexpected columns");
}

// ---------------------------------------------------------------------------
// Row access

namespace detail {

inline ConceptRecord read_record(const sql::Statement& st, const SchemaInfo& schema, int first_column = 0) {
  ConceptRecord rec;
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (auto why = set_field_text(rec, schema.columns[i], st.text(first_column + static_cast<int>(i))))
      throw Error(ErrorKind::CorruptStore, "stored row: " + *why);
  }
  return rec;
}

}  // namespace detail

/// Visits every concept row in (code, term_id, term) order.
template <typename Fn>
void for_each_concept(StoreHandle& handle, const DictionaryAdapter& adapter, Fn&& fn) {
  require_schema(handle, adapter);
  const auto schema = adapter_schema(adapter);
  auto st = handle.prepare("SELECT " + detail::select_columns(schema) + " FROM " +
                           sql::quote_ident(adapter.concept_table) + " ORDER BY " + detail::order_clause(adapter));
  while (st.step()) fn(detail::read_record(st, schema));
}

inline std::vector<ConceptRecord> scan_concepts(StoreHandle& handle, const DictionaryAdapter& adapter) {
  std::vector<ConceptRecord> out;
  for_each_concept(handle, adapter, [&](ConceptRecord rec) { out.push_back(std::move(rec)); });
  return out;
}

inline std::vector<ParentLink> scan_links(StoreHandle& handle, const DictionaryAdapter& adapter) {
  require_schema(handle, adapter, true);
  const auto code_col = sql::quote_ident(*adapter.ptable_code_field);
  const auto parent_col = sql::quote_ident(*adapter.ptable_parent_field);
  auto st = handle.prepare("SELECT " + code_col + ", " + parent_col + " FROM " +
                           sql::quote_ident(*adapter.parent_table) + " ORDER BY " + code_col + ", " + parent_col);
  std::vector<ParentLink> out;
  while (st.step()) out.push_back({std::string(st.text(0)), std::string(st.text(1))});
  return out;
}

/// Point lookup through the code index.
inline std::vector<ConceptRecord> lookup_code(StoreHandle& handle, const DictionaryAdapter& adapter,
                                              std::string_view code) {
  require_schema(handle, adapter);
  const auto schema = adapter_schema(adapter);
  auto st = handle.prepare("SELECT " + detail::select_columns(schema) + " FROM " +
                           sql::quote_ident(adapter.concept_table) + " WHERE " +
                           sql::quote_ident(adapter.code_field) + " = ?1 ORDER BY " + detail::order_clause(adapter));
  st.bind(1, code);
  std::vector<ConceptRecord> out;
  while (st.step()) out.push_back(detail::read_record(st, schema));
  return out;
}

inline bool code_exists(StoreHandle& handle, const DictionaryAdapter& adapter, std::string_view code) {
  require_schema(handle, adapter);
  auto st = handle.prepare("SELECT 1 FROM " + sql::quote_ident(adapter.concept_table) + " WHERE " +
                           sql::quote_ident(adapter.code_field) + " = ?1 LIMIT 1");
  st.bind(1, code);
  return st.step();
}

/// Distinct codes that start with `prefix` (byte-wise), ascending.
inline std::vector<std::string> codes_with_prefix(StoreHandle& handle, const DictionaryAdapter& adapter,
                                                  std::string_view prefix) {
  require_schema(handle, adapter);
  const auto code_col = sql::quote_ident(adapter.code_field);
  std::string upper(prefix);
  while (!upper.empty() && static_cast<unsigned char>(upper.back()) == 0xff) upper.pop_back();
  if (!upper.empty()) upper.back() = static_cast<char>(static_cast<unsigned char>(upper.back()) + 1);
  std::string text = "SELECT DISTINCT " + code_col + " FROM " + sql::quote_ident(adapter.concept_table) +
                     " WHERE " + code_col + " >= ?1";
  if (!upper.empty()) text += " AND " + code_col + " < ?2";
  text += " ORDER BY " + code_col;
  auto st = handle.prepare(text);
  st.bind(1, prefix);
  if (!upper.empty()) st.bind(2, upper);
  std::vector<std::string> out;
  while (st.step()) out.emplace_back(st.text(0));
  return out;
}

inline std::size_t count_concepts(StoreHandle& handle, const DictionaryAdapter& adapter) {
  require_schema(handle, adapter);
  auto st = handle.prepare("SELECT COUNT(*) FROM " + sql::quote_ident(adapter.concept_table));
  st.step();
  return static_cast<std::size_t>(st.integer(0));
}

}  // namespace termforge
