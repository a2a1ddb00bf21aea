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

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedbm/dataset.hpp"
#include "fedbm/monitor.hpp"
#include "fedbm/numeric.hpp"

namespace fedbm::fed {

using nlohmann::json;

// Wire protocol: one UTF-8 JSON object per line over TCP.
//
// Request  {"session": <token or null>, "op": <name>, "args": {...}}
// Response {"status": "ok"|"error", "payload": ..., "error_kind": ...,
//           "message": ...}
//
// Payload shapes by operation:
//   scalar      {"value": <number>}
//   rows        {"columns": [...], "rows": [[...], ...]}
//   monitoring  {"entries": [{"epoch","metric","dataset","value"}, ...]}
//   ack         {"label": ..., "overwrote": ...} / {"session": ...} / {}
//   model       {"format": "fedbm-model", "text": ...} (export gate only)

namespace errors {
inline constexpr const char* kUnauthorized = "unauthorized";
inline constexpr const char* kForbiddenOperation = "forbidden_operation";
inline constexpr const char* kExportDisabled = "export_disabled";
inline constexpr const char* kDisclosureGuard = "disclosure_guard";
inline constexpr const char* kBadRequest = "bad_request";
inline constexpr const char* kNotFound = "not_found";
inline constexpr const char* kModelTooLarge = "model_too_large";
inline constexpr const char* kIoError = "io_error";
inline constexpr const char* kInternalError = "internal_error";
}  // namespace errors

struct Request {
  std::string session;  // empty: no session (login)
  std::string op;
  json args = json::object();
};

struct Response {
  bool ok = true;
  json payload;
  std::string error_kind;
  std::string message;

  static Response success(json payload = json::object()) {
    Response r;
    r.ok = true;
    r.payload = std::move(payload);
    return r;
  }

  static Response error(const std::string& kind, const std::string& message) {
    Response r;
    r.ok = false;
    r.error_kind = kind;
    r.message = message;
    return r;
  }
};

inline std::string encode_request(const Request& r) {
  json j;
  j["session"] = r.session.empty() ? json(nullptr) : json(r.session);
  j["op"] = r.op;
  j["args"] = r.args;
  return j.dump();
}

inline Request parse_request(const std::string& line) {
  const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::invalid_argument("request is not a JSON object");
  }
  Request r;
  if (j.contains("session") && !j["session"].is_null()) {
    if (!j["session"].is_string()) {
      throw std::invalid_argument("session must be a string or null");
    }
    r.session = j["session"].get<std::string>();
  }
  if (!j.contains("op") || !j["op"].is_string()) {
    throw std::invalid_argument("missing operation name");
  }
  r.op = j["op"].get<std::string>();
  if (j.contains("args")) {
    if (!j["args"].is_object()) {
      throw std::invalid_argument("args must be an object");
    }
    r.args = j["args"];
  }
  return r;
}

inline std::string encode_response(const Response& r) {
  json j;
  j["status"] = r.ok ? "ok" : "error";
  j["payload"] = r.payload.is_null() && r.ok ? json::object() : r.payload;
  j["error_kind"] = r.ok ? json(nullptr) : json(r.error_kind);
  j["message"] = r.message.empty() ? json(nullptr) : json(r.message);
  return j.dump();
}

inline Response parse_response(const std::string& line) {
  const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() || !j.contains("status")) {
    throw std::invalid_argument("malformed response envelope");
  }
  Response r;
  r.ok = j["status"] == "ok";
  if (j.contains("payload")) {
    r.payload = j["payload"];
  }
  if (!r.ok) {
    r.error_kind = j.value("error_kind", "");
    if (j.contains("message") && j["message"].is_string()) {
      r.message = j["message"].get<std::string>();
    }
  }
  return r;
}

// Payload builders and readers.

inline json scalar_payload(double value) { return json{{"value", value}}; }

inline json rows_payload(const std::vector<std::string>& columns,
                         const Matrix& values, bool integral) {
  json cols = json::array();
  for (const auto& c : columns) {
    cols.push_back(c);
  }
  json rows = json::array();
  for (Index i = 0; i < values.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < values.cols(); ++j) {
      if (integral) {
        row.push_back(static_cast<int>(values(i, j)));
      } else {
        row.push_back(values(i, j));
      }
    }
    rows.push_back(std::move(row));
  }
  return json{{"columns", std::move(cols)}, {"rows", std::move(rows)}};
}

inline json monitoring_payload(const MonitoringLog& log) {
  json entries = json::array();
  for (const auto& e : log.entries) {
    entries.push_back(json{{"epoch", e.epoch},
                           {"metric", metric_name(e.metric)},
                           {"dataset", e.dataset_label},
                           {"value", e.value}});
  }
  return json{{"entries", std::move(entries)}};
}

inline MonitoringLog monitoring_from_payload(const json& payload) {
  MonitoringLog log;
  if (!payload.is_object() || !payload.contains("entries") ||
      !payload["entries"].is_array()) {
    throw std::invalid_argument("payload has no monitoring entries");
  }
  for (const auto& e : payload["entries"]) {
    log.append(e.at("epoch").get<int>(),
               metric_from_name(e.at("metric").get<std::string>()),
               e.at("dataset").get<std::string>(),
               e.at("value").get<double>());
  }
  return log;
}

inline BinaryDataset dataset_from_rows_payload(const json& payload) {
  if (!payload.is_object() || !payload.contains("rows") ||
      !payload["rows"].is_array()) {
    throw std::invalid_argument("payload has no rows");
  }
  std::vector<std::string> columns;
  if (payload.contains("columns") && payload["columns"].is_array()) {
    for (const auto& c : payload["columns"]) {
      columns.push_back(c.get<std::string>());
    }
  }
  const auto& rows = payload["rows"];
  const Index n = static_cast<Index>(rows.size());
  const Index m = n > 0 ? static_cast<Index>(rows[0].size())
                        : static_cast<Index>(columns.size());
  Matrix values(n, m);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != m) {
      throw std::invalid_argument("ragged rows payload");
    }
    for (Index j = 0; j < m; ++j) {
      values(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return BinaryDataset(std::move(values), std::move(columns));
}

}  // namespace fedbm::fed
