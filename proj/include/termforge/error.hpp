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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace termforge {

enum class ErrorKind {
  // model
  UnknownKind,
  DuplicateKind,
  InvalidAdapter,
  // ingest
  InvalidBundle,
  MalformedRow,
  MissingColumn,
  CodeWidthError,
  DanglingParent,
  DuplicateRecord,
  PreferredTermError,
  CycleDetected,
  AlreadyBuilt,
  // store
  NotFound,
  PermissionDenied,
  CorruptStore,
  StoreBusy,
  AlreadyExists,
  SchemaMissing,
  UnknownBackend,
  StoreError,
  // query
  SyntaxError,
  UnknownField,
  // relations
  UnknownCode,
  // config
  BadJson,
  MissingKey,
  // used by build fault injection
  InjectedFault,
};

inline std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownKind: return "UnknownKind";
    case ErrorKind::DuplicateKind: return "DuplicateKind";
    case ErrorKind::InvalidAdapter: return "InvalidAdapter";
    case ErrorKind::InvalidBundle: return "InvalidBundle";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::CodeWidthError: return "CodeWidthError";
    case ErrorKind::DanglingParent: return "DanglingParent";
    case ErrorKind::DuplicateRecord: return "DuplicateRecord";
    case ErrorKind::PreferredTermError: return "PreferredTermError";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::AlreadyBuilt: return "AlreadyBuilt";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::PermissionDenied: return "PermissionDenied";
    case ErrorKind::CorruptStore: return "CorruptStore";
    case ErrorKind::StoreBusy: return "StoreBusy";
    case ErrorKind::AlreadyExists: return "AlreadyExists";
    case ErrorKind::SchemaMissing: return "SchemaMissing";
    case ErrorKind::UnknownBackend: return "UnknownBackend";
    case ErrorKind::StoreError: return "StoreError";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownField: return "UnknownField";
    case ErrorKind::UnknownCode: return "UnknownCode";
    case ErrorKind::BadJson: return "BadJson";
    case ErrorKind::MissingKey: return "MissingKey";
    case ErrorKind::InjectedFault: return "InjectedFault";
  }
  return "Error";
}

/// Base exception for every failure raised by the library. The kind is the
/// stable, machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return kind_name(kind_); }

 private:
  ErrorKind kind_;
};

/// A problem tied to one line of an input file (1-based, header is line 1).
class RowError : public Error {
 public:
  RowError(ErrorKind kind, std::string file, std::size_t line, const std::string& reason)
      : Error(kind, file + ":" + std::to_string(line) + ": " + reason),
        file_(std::move(file)),
        line_(line),
        reason_(reason) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string reason_;
};

/// Predicate parse failure. `position` is a 0-based byte offset into the input.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found)
      : Error(ErrorKind::SyntaxError, describe(position, expected, found)),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  static std::string describe(std::size_t position, const std::vector<std::string>& expected,
                              const std::string& found) {
    std::string msg = "at position " + std::to_string(position) + ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i > 0) msg += (i + 1 == expected.size()) ? " or " : ", ";
      msg += expected[i];
    }
    msg += ", found " + found;
    return msg;
  }

  std::size_t position_;
  std::vector<std::string> expected_;
};

class UnknownFieldError : public Error {
 public:
  UnknownFieldError(std::string field, std::size_t position, std::vector<std::string> available)
      : Error(ErrorKind::UnknownField, describe(field, available)),
        field_(std::move(field)),
        position_(position),
        available_(std::move(available)) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& available() const noexcept { return available_; }

 private:
  static std::string describe(const std::string& field, const std::vector<std::string>& available) {
    std::string msg = "'" + field + "'; available fields:";
    for (const auto& f : available) msg += " " + f;
    return msg;
  }

  std::string field_;
  std::size_t position_;
  std::vector<std::string> available_;
};

}  // namespace termforge
