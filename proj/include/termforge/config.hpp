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
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "termforge/error.hpp"
#include "termforge/model.hpp"
#include "termforge/store.hpp"

namespace termforge {

struct CliConfig {
  std::string dict_type;
  StoreConfig store;

  bool operator==(const CliConfig&) const = default;
};

enum class ConfigSource { InlineArgs, FilePath, HomeRelative };

namespace detail {

inline void set_store_key(StoreConfig& cfg, std::string_view key, std::string value, bool& has_type, bool& has_db) {
  if (key == "type") cfg.type = std::move(value), has_type = true;
  else if (key == "dbname") cfg.dbname = std::move(value), has_db = true;
  else if (key == "user") cfg.user = std::move(value);
  else if (key == "pass") cfg.pass = std::move(value);
  else if (key == "host") cfg.host = std::move(value);
  else if (key == "port") cfg.port = std::move(value);
}

inline CliConfig finish(std::string_view dict_type, StoreConfig store, bool has_type, bool has_db) {
  if (!has_type) throw Error(ErrorKind::MissingKey, "type");
  if (!has_db) throw Error(ErrorKind::MissingKey, "dbname");
  resolve_adapter(dict_type);
  return CliConfig{std::string(dict_type), std::move(store)};
}

}  // namespace detail

/// Parses the JSON config object {"type", "dbname", optional user/pass/host/port}.
/// Unrecognised keys are ignored.
inline CliConfig config_from_json(std::string_view dict_type, std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::BadJson, "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::BadJson, "config must be a JSON object");
  StoreConfig store;
  bool has_type = false, has_db = false;
  for (const auto& [key, value] : doc.items()) {
    std::string text;
    if (value.is_string()) text = value.get<std::string>();
    else if (key == "port" && value.is_number_integer()) text = std::to_string(value.get<long long>());
    else if (key == "type" || key == "dbname" || key == "user" || key == "pass" || key == "host" || key == "port")
      throw Error(ErrorKind::BadJson, "key '" + key + "' must be a string");
    else continue;
    detail::set_store_key(store, key, std::move(text), has_type, has_db);
  }
  return detail::finish(dict_type, std::move(store), has_type, has_db);
}

inline CliConfig config_from_file(std::string_view dict_type, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, "config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(dict_type, buf.str());
}

inline std::filesystem::path home_directory() {
  const char* home = std::getenv("HOME");
  if (!home || !*home) throw Error(ErrorKind::NotFound, "HOME is not set");
  return home;
}

/// Loads `name` relative to the user's home directory.
inline CliConfig config_from_home(std::string_view dict_type, const std::filesystem::path& name) {
  return config_from_file(dict_type, home_directory() / name);
}

/// Builds a config from "key=value" items. `name` is accepted as a synonym
/// for `dbname`.
inline CliConfig config_from_pairs(std::string_view dict_type, const std::vector<std::string>& items) {
  StoreConfig store;
  bool has_type = false, has_db = false;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::BadJson, "option '" + item + "' is not key=value");
    std::string key = item.substr(0, eq);
    if (key == "name") key = "dbname";
    detail::set_store_key(store, key, item.substr(eq + 1), has_type, has_db);
  }
  return detail::finish(dict_type, std::move(store), has_type, has_db);
}

/// For FilePath and HomeRelative, `payload` holds the single path; for
/// InlineArgs it holds key=value items.
inline CliConfig load_config(ConfigSource source, std::string_view dict_type, const std::vector<std::string>& payload) {
  switch (source) {
    case ConfigSource::InlineArgs: return config_from_pairs(dict_type, payload);
    case ConfigSource::FilePath:
    case ConfigSource::HomeRelative:
      if (payload.size() != 1) throw Error(ErrorKind::NotFound, "expected exactly one config path");
      return source == ConfigSource::FilePath ? config_from_file(dict_type, payload.front())
                                              : config_from_home(dict_type, payload.front());
  }
  throw Error(ErrorKind::NotFound, "unknown config source");
}

}  // namespace termforge
