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

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/fed/config.hpp"
#include "fedbm/fed/protocol.hpp"
#include "fedbm/fed/socket.hpp"

namespace fedbm::fed {

/// Remote failure attributed to exactly one site.
class RemoteError : public std::runtime_error {
 public:
  RemoteError(std::string site, std::string kind, const std::string& message)
      : std::runtime_error("site " + site + ": " + message + " [" + kind + "]"),
        site_(std::move(site)),
        kind_(std::move(kind)) {}

  const std::string& site() const { return site_; }
  const std::string& kind() const { return kind_; }

 private:
  std::string site_;
  std::string kind_;
};

inline std::pair<std::string, std::uint16_t> parse_url(const std::string& url) {
  std::string rest = url;
  const std::string scheme = "tcp://";
  if (rest.rfind(scheme, 0) == 0) {
    rest = rest.substr(scheme.size());
  }
  return detail::split_address(rest);
}

/// One site connection plus its session token. Reconnects transparently:
/// sessions are keyed by token, not by TCP connection.
class SiteChannel {
 public:
  SiteChannel(std::string label, std::string url, double timeout_seconds)
      : label_(std::move(label)),
        url_(std::move(url)),
        timeout_(timeout_seconds) {}

  const std::string& label() const { return label_; }
  const std::string& url() const { return url_; }
  const std::string& session_token() const { return session_token_; }
  void set_session_token(std::string token) {
    session_token_ = std::move(token);
  }

  /// Sends one request and waits for the response envelope. Throws
  /// RemoteError for error responses and transport failures.
  Response call(const std::string& op, json args) {
    Request request;
    request.session = session_token_;
    request.op = op;
    request.args = std::move(args);
    std::lock_guard lock(mutex_);
    try {
      ensure_connected();
      stream_.send_line(encode_request(request));
      const auto line = stream_.recv_line(timeout_);
      if (!line) {
        throw SocketError("connection closed by site");
      }
      return parse_response(*line);
    } catch (const SocketError& e) {
      stream_.close();
      throw RemoteError(label_, errors::kIoError, e.what());
    }
  }

  json call_ok(const std::string& op, json args) {
    Response r = call(op, std::move(args));
    if (!r.ok) {
      throw RemoteError(label_, r.error_kind, r.message);
    }
    return r.payload;
  }

  void close() {
    std::lock_guard lock(mutex_);
    stream_.close();
  }

 private:
  void ensure_connected() {
    if (!stream_.open()) {
      auto [host, port] = parse_url(url_);
      stream_ = TcpStream::connect(host, port, timeout_);
    }
  }

  std::string label_;
  std::string url_;
  double timeout_;
  std::string session_token_;
  TcpStream stream_;
  std::mutex mutex_;
};

/// Client-side orchestrator holding one session per site.
class MultiSiteHandle {
 public:
  static constexpr double kDefaultTimeoutSeconds = 600.0;

  /// Opens one session per site; all-or-nothing. On any failure the already
  /// opened sessions are closed and the error is rethrown with its site
  /// label. With `assign`, each site loads its table under the label "D".
  static MultiSiteHandle login(const std::vector<LoginRecord>& records,
                               bool assign,
                               double timeout_seconds = kDefaultTimeoutSeconds) {
    require(!records.empty(), "no login records");
    MultiSiteHandle handle;
    try {
      for (const LoginRecord& record : records) {
        auto channel = std::make_unique<SiteChannel>(record.server, record.url,
                                                     timeout_seconds);
        const json payload =
            channel->call_ok("login", json{{"user", record.user},
                                           {"token", record.password},
                                           {"table", record.table},
                                           {"assign", assign}});
        if (!payload.contains("session") || !payload["session"].is_string()) {
          throw RemoteError(record.server, errors::kInternalError,
                            "login response carried no session token");
        }
        channel->set_session_token(payload["session"].get<std::string>());
        handle.channels_.push_back(std::move(channel));
      }
    } catch (...) {
      handle.logout_quietly();
      throw;
    }
    return handle;
  }

  /// Reattaches to existing sessions (token-based), e.g. from a handle file.
  static MultiSiteHandle attach(
      const std::vector<std::pair<LoginRecord, std::string>>& sessions,
      double timeout_seconds = kDefaultTimeoutSeconds) {
    MultiSiteHandle handle;
    for (const auto& [record, token] : sessions) {
      auto channel = std::make_unique<SiteChannel>(record.server, record.url,
                                                   timeout_seconds);
      channel->set_session_token(token);
      handle.channels_.push_back(std::move(channel));
    }
    return handle;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& c : channels_) {
      out.push_back(c->label());
    }
    return out;
  }

  SiteChannel& site(const std::string& label) {
    for (auto& c : channels_) {
      if (c->label() == label) {
        return *c;
      }
    }
    throw std::invalid_argument("no such site: " + label);
  }

  std::size_t n_sites() const { return channels_.size(); }

  /// Broadcasts one request to every site concurrently and gathers the
  /// payloads keyed by site label. The first failing site's error is thrown
  /// once all calls finished.
  std::map<std::string, json> call_all(const std::string& op,
                                       const json& args) {
    std::map<std::string, json> results;
    std::vector<std::exception_ptr> failures(channels_.size());
    std::mutex results_mutex;
    std::vector<std::thread> threads;
    threads.reserve(channels_.size());
    for (std::size_t i = 0; i < channels_.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          json payload = channels_[i]->call_ok(op, args);
          std::lock_guard lock(results_mutex);
          results.emplace(channels_[i]->label(), std::move(payload));
        } catch (...) {
          failures[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) {
      t.join();
    }
    for (const auto& failure : failures) {
      if (failure) {
        std::rethrow_exception(failure);
      }
    }
    return results;
  }

  /// Ends every session and closes the connections.
  void logout() {
    for (auto& channel : channels_) {
      channel->call_ok("logout", json::object());
      channel->close();
    }
    channels_.clear();
  }

 private:
  void logout_quietly() {
    for (auto& channel : channels_) {
      try {
        channel->call("logout", json::object());
      } catch (...) {
      }
      channel->close();
    }
    channels_.clear();
  }

  std::vector<std::unique_ptr<SiteChannel>> channels_;
};

/// Row-concatenation of per-site synthetic datasets in ascending site-label
/// order; column names come from the first part.
inline BinaryDataset pool_samples(
    const std::map<std::string, BinaryDataset>& per_site) {
  require(!per_site.empty(), "nothing to pool");
  Index total = 0;
  const Index cols = per_site.begin()->second.cols();
  for (const auto& [label, part] : per_site) {
    require(part.cols() == cols, "pooled parts differ in column count");
    total += part.rows();
  }
  Matrix values(total, cols);
  Index row = 0;
  for (const auto& [label, part] : per_site) {  // std::map: ascending labels
    values.middleRows(row, part.rows()) = part.values;
    row += part.rows();
  }
  return BinaryDataset(std::move(values), per_site.begin()->second.column_names);
}

}  // namespace fedbm::fed
