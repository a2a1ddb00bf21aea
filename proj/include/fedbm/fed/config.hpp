/*
 * Copyright 2026 The fedbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/numeric.hpp"

namespace fedbm::fed {

/// Site server configuration. File format: `key = value` lines with
/// `#` comments; users are comma-separated `name:token` pairs.
///
///   address = 127.0.0.1:8771
///   data_dir = /srv/site-a
///   allow_model_export = false
///   min_rows_for_training = 10
///   users = alice:s3cret
struct SiteConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0: pick a free port
  std::string data_directory;
  bool allow_model_export = false;
  int min_rows_for_training = 10;
  std::vector<std::pair<std::string, std::string>> credentials;

  void validate() const {
    require(min_rows_for_training >= 1,
            "min_rows_for_training must be at least 1");
    require(!credentials.empty(), "site needs at least one user");
    require(!data_directory.empty(), "site needs a data directory");
  }
};

namespace detail {

inline std::pair<std::string, std::uint16_t> split_address(
    const std::string& address) {
  const auto pos = address.rfind(':');
  require(pos != std::string::npos, "address must be host:port");
  const std::string host = address.substr(0, pos);
  const int port = std::stoi(address.substr(pos + 1));
  require(port >= 0 && port <= 65535, "port out of range");
  return {host, static_cast<std::uint16_t>(port)};
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    return false;
  }
  throw std::invalid_argument("cannot parse boolean value: " + v);
}

}  // namespace detail

inline SiteConfig parse_site_config(std::istream& in) {
  SiteConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) {
      line = line.substr(0, comment);
    }
    line = fedbm::detail::trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("site config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = fedbm::detail::trim(line.substr(0, eq));
    const std::string value = fedbm::detail::trim(line.substr(eq + 1));
    if (key == "address") {
      auto [host, port] = detail::split_address(value);
      cfg.host = host;
      cfg.port = port;
    } else if (key == "data_dir") {
      cfg.data_directory = value;
    } else if (key == "allow_model_export") {
      cfg.allow_model_export = detail::parse_bool(value);
    } else if (key == "min_rows_for_training") {
      cfg.min_rows_for_training = std::stoi(value);
    } else if (key == "users") {
      std::stringstream users(value);
      std::string entry;
      while (std::getline(users, entry, ',')) {
        entry = fedbm::detail::trim(entry);
        if (entry.empty()) {
          continue;
        }
        const auto colon = entry.find(':');
        if (colon == std::string::npos) {
          throw std::invalid_argument("users entries must be name:token");
        }
        cfg.credentials.emplace_back(
            fedbm::detail::trim(entry.substr(0, colon)),
            fedbm::detail::trim(entry.substr(colon + 1)));
      }
    } else {
      throw std::invalid_argument("unknown site config key: " + key);
    }
  }
  return cfg;
}

inline SiteConfig load_site_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open site config: " + path);
  }
  return parse_site_config(in);
}

/// One row of the logins file (CSV: server,url,user,password,table).
struct LoginRecord {
  std::string server;  // site label
  std::string url;     // host:port
  std::string user;
  std::string password;  // bearer token
  std::string table;
};

inline std::vector<LoginRecord> parse_logins_csv(std::istream& in) {
  std::vector<LoginRecord> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (fedbm::detail::trim(line).empty()) {
      continue;
    }
    const auto fields = fedbm::detail::split_csv_line(line);
    if (first) {
      first = false;
      if (!fields.empty() && fields[0] == "server") {
        continue;  // header
      }
    }
    if (fields.size() != 5) {
      throw std::invalid_argument(
          "logins file needs server,url,user,password,table");
    }
    records.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
  }
  require(!records.empty(), "logins file is empty");
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      require(records[i].server != records[j].server,
              "site labels must be unique");
    }
  }
  return records;
}

inline std::vector<LoginRecord> load_logins_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open logins file: " + path);
  }
  return parse_logins_csv(in);
}

}  // namespace fedbm::fed
