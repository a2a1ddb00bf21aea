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

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "fedbm/ais.hpp"
#include "fedbm/dataset.hpp"
#include "fedbm/exact.hpp"
#include "fedbm/fed/config.hpp"
#include "fedbm/fed/protocol.hpp"
#include "fedbm/fed/socket.hpp"
#include "fedbm/gibbs.hpp"
#include "fedbm/latent.hpp"
#include "fedbm/model_io.hpp"
#include "fedbm/train.hpp"

namespace fedbm::fed {

/// Operation failure with a wire-level error kind.
class OpError : public std::runtime_error {
 public:
  OpError(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

namespace detail {

struct StoredModel {
  std::variant<Rbm, Dbm, std::vector<Rbm>> model;
  Index trained_rows = 0;
  std::vector<std::string> columns;
};

using SessionObject = std::variant<BinaryDataset, StoredModel, LayerSpec>;

struct Session {
  std::string user;
  Rng rng{0};
  std::map<std::string, SessionObject> objects;
  std::mutex mutex;
};

inline const json& need(const json& args, const char* key) {
  if (!args.contains(key)) {
    throw OpError(errors::kBadRequest,
                  std::string("missing argument: ") + key);
  }
  return args.at(key);
}

inline std::string arg_string(const json& args, const char* key) {
  const json& v = need(args, key);
  if (!v.is_string()) {
    throw OpError(errors::kBadRequest,
                  std::string(key) + " must be a string");
  }
  return v.get<std::string>();
}

inline std::string arg_string_or(const json& args, const char* key,
                                 const std::string& fallback) {
  return args.contains(key) ? arg_string(args, key) : fallback;
}

inline long long arg_int(const json& args, const char* key) {
  const json& v = need(args, key);
  if (!v.is_number_integer()) {
    throw OpError(errors::kBadRequest,
                  std::string(key) + " must be an integer");
  }
  return v.get<long long>();
}

inline long long arg_int_or(const json& args, const char* key,
                            long long fallback) {
  return args.contains(key) ? arg_int(args, key) : fallback;
}

inline double arg_double(const json& args, const char* key) {
  const json& v = need(args, key);
  if (!v.is_number()) {
    throw OpError(errors::kBadRequest, std::string(key) + " must be a number");
  }
  return v.get<double>();
}

inline double arg_double_or(const json& args, const char* key,
                            double fallback) {
  return args.contains(key) ? arg_double(args, key) : fallback;
}

inline bool arg_bool_or(const json& args, const char* key, bool fallback) {
  if (!args.contains(key)) {
    return fallback;
  }
  if (!args.at(key).is_boolean()) {
    throw OpError(errors::kBadRequest, std::string(key) + " must be a boolean");
  }
  return args.at(key).get<bool>();
}

inline void check_table_name(const std::string& table) {
  if (table.empty()) {
    throw OpError(errors::kBadRequest, "table name is empty");
  }
  for (char c : table) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) {
      throw OpError(errors::kBadRequest, "invalid character in table name");
    }
  }
  if (table.find("..") != std::string::npos) {
    throw OpError(errors::kBadRequest, "invalid table name");
  }
}

}  // namespace detail

/// A data-holding site: serves the whitelisted aggregate-only operations of
/// the wire protocol over newline-delimited JSON. Raw table rows never leave
/// the process; model parameters only under the explicit export gate.
class SiteServer {
 public:
  explicit SiteServer(SiteConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::random_device rd;
    token_engine_.seed((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
  }

  ~SiteServer() { stop(); }

  SiteServer(const SiteServer&) = delete;
  SiteServer& operator=(const SiteServer&) = delete;

  void start() {
    listener_ = TcpListener::bind_and_listen(cfg_.host, cfg_.port);
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) {
      return;
    }
    listener_.close();
    {
      std::lock_guard lock(connections_mutex_);
      for (int fd : connection_fds_) {
        ::shutdown(fd, SHUT_RDWR);
      }
    }
    if (accept_thread_.joinable()) {
      accept_thread_.join();
    }
    for (auto& w : workers_) {
      if (w.joinable()) {
        w.join();
      }
    }
    workers_.clear();
  }

  std::uint16_t port() const { return listener_.port(); }
  const SiteConfig& config() const { return cfg_; }

  /// Single-request dispatch; exposed for in-process tests.
  Response handle(const Request& request) {
    try {
      if (request.op == "login") {
        return handle_login(request.args);
      }
      std::shared_ptr<detail::Session> session = find_session(request.session);
      if (!session) {
        return Response::error(errors::kUnauthorized,
                               "unknown or expired session token");
      }
      std::lock_guard lock(session->mutex);
      return dispatch(request, *session);
    } catch (const OpError& e) {
      return Response::error(e.kind(), e.what());
    } catch (const ModelTooLargeError& e) {
      return Response::error(errors::kModelTooLarge, e.what());
    } catch (const std::invalid_argument& e) {
      return Response::error(errors::kBadRequest, e.what());
    } catch (const std::exception& e) {
      return Response::error(errors::kInternalError, e.what());
    }
  }

 private:
  void accept_loop() {
    while (running_) {
      std::optional<TcpStream> stream = listener_.accept(100);
      if (!stream) {
        continue;
      }
      std::lock_guard lock(connections_mutex_);
      if (!running_) {
        return;
      }
      // Register the fd before the worker starts so stop() can always
      // unblock it.
      connection_fds_.insert(stream->fd());
      workers_.emplace_back(
          [this, s = std::move(*stream)]() mutable { serve_connection(s); });
    }
  }

  void serve_connection(TcpStream& stream) {
    const int fd = stream.fd();
    try {
      while (running_) {
        std::optional<std::string> line = stream.recv_line(-1.0);
        if (!line) {
          break;
        }
        Response response;
        try {
          response = handle(parse_request(*line));
        } catch (const std::invalid_argument& e) {
          response = Response::error(errors::kBadRequest, e.what());
        }
        stream.send_line(encode_response(response));
      }
    } catch (const SocketError&) {
      // Connection dropped; session state stays valid for reconnects.
    }
    std::lock_guard lock(connections_mutex_);
    connection_fds_.erase(fd);
  }

  std::shared_ptr<detail::Session> find_session(const std::string& token) {
    if (token.empty()) {
      return nullptr;
    }
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(token);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::string new_token() {
    static const char* hex = "0123456789abcdef";
    std::string token(32, '0');
    std::lock_guard lock(sessions_mutex_);
    for (auto& c : token) {
      c = hex[token_engine_() & 15u];
    }
    return token;
  }

  Response handle_login(const json& args) {
    const std::string user = detail::arg_string(args, "user");
    const std::string token = detail::arg_string(args, "token");
    const std::string table = detail::arg_string(args, "table");
    const bool assign = detail::arg_bool_or(args, "assign", true);
    bool authorized = false;
    for (const auto& [name, secret] : cfg_.credentials) {
      if (name == user && secret == token) {
        authorized = true;
        break;
      }
    }
    if (!authorized) {
      return Response::error(errors::kUnauthorized, "bad user or token");
    }
    detail::check_table_name(table);
    const std::string path = cfg_.data_directory + "/" + table + ".csv";
    BinaryDataset data;
    try {
      data = load_dataset_csv(path);
    } catch (const std::runtime_error&) {
      return Response::error(errors::kNotFound, "no such table: " + table);
    }
    auto session = std::make_shared<detail::Session>();
    session->user = user;
    if (assign) {
      session->objects.emplace("D", std::move(data));
    }
    const std::string session_token = new_token();
    {
      std::lock_guard lock(sessions_mutex_);
      sessions_[session_token] = session;
    }
    return Response::success(json{{"session", session_token}});
  }

  // --- object store --------------------------------------------------------

  static const BinaryDataset& get_dataset(detail::Session& session,
                                          const std::string& label) {
    const auto it = session.objects.find(label);
    if (it == session.objects.end()) {
      throw OpError(errors::kNotFound, "no such object: " + label);
    }
    const auto* data = std::get_if<BinaryDataset>(&it->second);
    if (data == nullptr) {
      throw OpError(errors::kBadRequest, label + " is not a dataset");
    }
    return *data;
  }

  static const detail::StoredModel& get_model(detail::Session& session,
                                              const std::string& label) {
    const auto it = session.objects.find(label);
    if (it == session.objects.end()) {
      throw OpError(errors::kNotFound, "no such object: " + label);
    }
    const auto* model = std::get_if<detail::StoredModel>(&it->second);
    if (model == nullptr) {
      throw OpError(errors::kBadRequest, label + " is not a model");
    }
    return *model;
  }

  static LayerSpec get_layerspec(detail::Session& session,
                                 const std::string& label) {
    const auto it = session.objects.find(label);
    if (it == session.objects.end()) {
      throw OpError(errors::kNotFound, "no such layer definition: " + label);
    }
    const auto* spec = std::get_if<LayerSpec>(&it->second);
    if (spec == nullptr) {
      throw OpError(errors::kBadRequest, label + " is not a layer definition");
    }
    return *spec;
  }

  static bool store_object(detail::Session& session, const std::string& label,
                           detail::SessionObject object) {
    const bool overwrote = session.objects.count(label) > 0;
    session.objects.insert_or_assign(label, std::move(object));
    return overwrote;
  }

  void guard_rows(Index rows, const std::string& what) const {
    if (rows < cfg_.min_rows_for_training) {
      throw OpError(errors::kDisclosureGuard,
                    what + " has fewer than " +
                        std::to_string(cfg_.min_rows_for_training) +
                        " rows; refusing by disclosure policy");
    }
  }

  // --- spec parsing ---------------------------------------------------------

  static AisConfig ais_from_args(const json& args) {
    AisConfig cfg;
    cfg.ntemperatures =
        static_cast<int>(detail::arg_int_or(args, "ntemperatures", 100));
    cfg.nparticles =
        static_cast<int>(detail::arg_int_or(args, "nparticles", 100));
    if (args.contains("burnin")) {
      cfg.burnin = static_cast<int>(detail::arg_int(args, "burnin"));
    }
    cfg.validate();
    return cfg;
  }

  static std::vector<LayerSpec> layers_from_args(detail::Session& session,
                                                 const json& args,
                                                 const char* key) {
    const json& v = detail::need(args, key);
    if (!v.is_array() || v.empty()) {
      throw OpError(errors::kBadRequest,
                    std::string(key) + " must be a non-empty array");
    }
    std::vector<LayerSpec> layers;
    for (const auto& entry : v) {
      if (entry.is_number_integer()) {
        layers.emplace_back(static_cast<Index>(entry.get<long long>()));
      } else if (entry.is_string()) {
        layers.push_back(get_layerspec(session, entry.get<std::string>()));
      } else {
        throw OpError(errors::kBadRequest,
                      "layer entries must be sizes or layer labels");
      }
    }
    return layers;
  }

  TrainSpec train_spec_from_args(detail::Session& session, const json& args,
                                 bool pretraining_names) const {
    TrainSpec spec;
    spec.epochs = static_cast<int>(detail::arg_int_or(args, "epochs", 10));
    spec.learningrate = detail::arg_double_or(args, "learningrate", 0.005);
    if (pretraining_names) {
      // stackrbms trains layers only; its epochs/learningrate arguments are
      // the per-layer (pretraining) parameters.
      spec.epochspretraining = spec.epochs;
      spec.learningratepretraining = spec.learningrate;
    } else {
      spec.epochspretraining =
          static_cast<int>(detail::arg_int_or(args, "epochspretraining", 10));
      spec.learningratepretraining =
          detail::arg_double_or(args, "learningratepretraining", 0.005);
    }
    spec.batchsize = static_cast<int>(detail::arg_int_or(args, "batchsize", 1));
    spec.cdsteps = static_cast<int>(detail::arg_int_or(args, "cdsteps", 1));
    spec.n_particles =
        static_cast<int>(detail::arg_int_or(args, "nparticles", 0));
    if (args.contains("metric")) {
      spec.monitoring_metric =
          metric_from_name(detail::arg_string(args, "metric"));
    }
    if (args.contains("ais")) {
      spec.monitoring_ais = ais_from_args(args.at("ais"));
    }
    if (args.contains("seed")) {
      spec.seed = static_cast<std::uint64_t>(detail::arg_int(args, "seed"));
    }
    if (args.contains("monitoringdata")) {
      const json& md = args.at("monitoringdata");
      if (!md.is_array()) {
        throw OpError(errors::kBadRequest, "monitoringdata must be an array");
      }
      for (const auto& label : md) {
        if (!label.is_string()) {
          throw OpError(errors::kBadRequest,
                        "monitoringdata entries must be labels");
        }
        spec.monitoring_datasets.push_back(label.get<std::string>());
      }
    }
    (void)session;
    return spec;
  }

  static MonitoringData resolve_monitoring(detail::Session& session,
                                           const TrainSpec& spec) {
    MonitoringData monitoring;
    for (const std::string& label : spec.monitoring_datasets) {
      monitoring.emplace_back(label, get_dataset(session, label));
    }
    return monitoring;
  }

  // --- operation handlers ---------------------------------------------------

  Response dispatch(const Request& request, detail::Session& session) {
    const std::string& op = request.op;
    const json& args = request.args;
    if (op == "logout") {
      std::lock_guard lock(sessions_mutex_);
      sessions_.erase(request.session);
      return Response::success();
    }
    if (op == "set_seed") {
      session.rng.seed(
          static_cast<std::uint64_t>(detail::arg_int(args, "seed")));
      return Response::success();
    }
    if (op == "splitdata") {
      return op_splitdata(session, args);
    }
    if (op == "define_layer") {
      return op_define_layer(session, args);
    }
    if (op == "define_partitioned_layer") {
      return op_define_partitioned_layer(session, args);
    }
    if (op == "fitrbm") {
      return op_fitrbm(session, args);
    }
    if (op == "stackrbms") {
      return op_stackrbms(session, args);
    }
    if (op == "fitdbm") {
      return op_fitdbm(session, args);
    }
    if (op == "samples") {
      return op_samples(session, args);
    }
    if (op == "reconstruction_error") {
      return op_reconstruction_error(session, args);
    }
    if (op == "rbm_loglikelihood" || op == "dbm_loglikelihood") {
      return op_ais_loglikelihood(session, args, op);
    }
    if (op == "exact_loglikelihood") {
      return op_exact_loglikelihood(session, args);
    }
    if (op == "logproblowerbound") {
      return op_logproblowerbound(session, args);
    }
    if (op == "top2latentdims") {
      return op_top2latentdims(session, args);
    }
    if (op == "export_model") {
      return op_export_model(session, args);
    }
    return Response::error(errors::kForbiddenOperation,
                           "operation is not whitelisted: " + op);
  }

  Response op_splitdata(detail::Session& session, const json& args) {
    const BinaryDataset& data =
        get_dataset(session, detail::arg_string(args, "data"));
    const double ratio = detail::arg_double(args, "ratio");
    const std::string part1 = detail::arg_string(args, "part1");
    const std::string part2 = detail::arg_string(args, "part2");
    auto [first, second] = splitdata(data, ratio, session.rng);
    json overwrote = json::array();
    const Index n1 = first.rows();
    const Index n2 = second.rows();
    if (store_object(session, part1, std::move(first))) {
      overwrote.push_back(part1);
    }
    if (store_object(session, part2, std::move(second))) {
      overwrote.push_back(part2);
    }
    return Response::success(json{{"labels", json::array({part1, part2})},
                                  {"rows", json::array({n1, n2})},
                                  {"overwrote", overwrote}});
  }

  Response op_define_layer(detail::Session& session, const json& args) {
    const std::string label = detail::arg_string(args, "label");
    LayerSpec spec(static_cast<Index>(detail::arg_int(args, "n_hidden")));
    if (args.contains("learningrate")) {
      spec.learningrate = detail::arg_double(args, "learningrate");
    }
    if (args.contains("epochs")) {
      spec.epochs = static_cast<int>(detail::arg_int(args, "epochs"));
    }
    if (args.contains("n_input")) {
      spec.n_input = static_cast<Index>(detail::arg_int(args, "n_input"));
    }
    spec.validate();
    const bool overwrote = store_object(session, label, spec);
    return Response::success(json{{"label", label}, {"overwrote", overwrote}});
  }

  Response op_define_partitioned_layer(detail::Session& session,
                                       const json& args) {
    const std::string label = detail::arg_string(args, "label");
    const json& parts = detail::need(args, "parts");
    if (!parts.is_array() || parts.empty()) {
      throw OpError(errors::kBadRequest, "parts must be a non-empty array");
    }
    LayerSpec spec;
    for (const auto& part : parts) {
      if (!part.is_string()) {
        throw OpError(errors::kBadRequest, "parts must be layer labels");
      }
      spec.parts.push_back(get_layerspec(session, part.get<std::string>()));
    }
    spec.validate();
    const bool overwrote = store_object(session, label, spec);
    return Response::success(json{{"label", label}, {"overwrote", overwrote}});
  }

  Response op_fitrbm(detail::Session& session, const json& args) {
    const std::string data_label = detail::arg_string(args, "data");
    const BinaryDataset& data = get_dataset(session, data_label);
    guard_rows(data.rows(), "dataset " + data_label);
    TrainSpec spec = train_spec_from_args(session, args, false);
    if (args.contains("layer")) {
      spec.layers = {get_layerspec(session, detail::arg_string(args, "layer"))};
    } else {
      spec.layers = {
          LayerSpec(static_cast<Index>(detail::arg_int(args, "nhidden")))};
    }
    const MonitoringData monitoring = resolve_monitoring(session, spec);
    auto [model, log] = fitrbm(data, spec, monitoring, session.rng);
    const std::string label = detail::arg_string_or(args, "model", "rbm");
    detail::StoredModel stored{std::move(model), data.rows(),
                               data.column_names};
    const bool overwrote = store_object(session, label, std::move(stored));
    json payload = monitoring_payload(log);
    payload["model"] = label;
    payload["overwrote"] = overwrote;
    return Response::success(std::move(payload));
  }

  Response op_stackrbms(detail::Session& session, const json& args) {
    const std::string data_label = detail::arg_string(args, "data");
    const BinaryDataset& data = get_dataset(session, data_label);
    guard_rows(data.rows(), "dataset " + data_label);
    TrainSpec spec = train_spec_from_args(session, args, true);
    spec.layers = layers_from_args(session, args, "nhiddens");
    const bool for_dbm = detail::arg_bool_or(args, "for_dbm", false);
    const MonitoringData monitoring = resolve_monitoring(session, spec);
    auto [stack, log] = stackrbms(data, spec, for_dbm, monitoring, session.rng);
    const std::string label = detail::arg_string_or(args, "model", "stack");
    detail::StoredModel stored{std::move(stack), data.rows(),
                               data.column_names};
    const bool overwrote = store_object(session, label, std::move(stored));
    json payload = monitoring_payload(log);
    payload["model"] = label;
    payload["overwrote"] = overwrote;
    return Response::success(std::move(payload));
  }

  Response op_fitdbm(detail::Session& session, const json& args) {
    const std::string data_label = detail::arg_string(args, "data");
    const BinaryDataset& data = get_dataset(session, data_label);
    guard_rows(data.rows(), "dataset " + data_label);
    TrainSpec spec = train_spec_from_args(session, args, false);
    spec.layers = layers_from_args(session, args, "nhiddens");
    const MonitoringData monitoring = resolve_monitoring(session, spec);
    auto [model, log] = fitdbm(data, spec, monitoring, session.rng);
    const std::string label = detail::arg_string_or(args, "model", "dbm");
    detail::StoredModel stored{std::move(model), data.rows(),
                               data.column_names};
    const bool overwrote = store_object(session, label, std::move(stored));
    json payload = monitoring_payload(log);
    payload["model"] = label;
    payload["overwrote"] = overwrote;
    return Response::success(std::move(payload));
  }

  Response op_samples(detail::Session& session, const json& args) {
    const std::string label = detail::arg_string(args, "model");
    const detail::StoredModel& stored = get_model(session, label);
    guard_rows(stored.trained_rows, "training data of model " + label);
    const Index n = static_cast<Index>(detail::arg_int(args, "n"));
    std::optional<Clamp> clamp;
    if (args.contains("conditioned_on")) {
      const json& c = args.at("conditioned_on");
      Clamp cl;
      for (const auto& i : detail::need(c, "indices")) {
        cl.indices.push_back(static_cast<Index>(i.get<long long>()));
      }
      const json& values = detail::need(c, "values");
      cl.values = Vector(static_cast<Index>(values.size()));
      for (Index k = 0; k < cl.values.size(); ++k) {
        cl.values(k) = values[static_cast<std::size_t>(k)].get<double>();
      }
      clamp = std::move(cl);
    }
    BinaryDataset generated;
    if (const auto* rbm = std::get_if<Rbm>(&stored.model)) {
      const int burnin = static_cast<int>(
          detail::arg_int_or(args, "burnin", kDefaultBurninRbm));
      generated = samples(*rbm, n, burnin, clamp, session.rng);
    } else if (const auto* dbm = std::get_if<Dbm>(&stored.model)) {
      const int burnin = static_cast<int>(
          detail::arg_int_or(args, "burnin", kDefaultBurninDbm));
      generated = samples(*dbm, n, burnin, clamp, session.rng);
    } else {
      throw OpError(errors::kBadRequest,
                    "RBM stacks cannot be sampled; train a DBM instead");
    }
    std::vector<std::string> columns = stored.columns;
    if (columns.empty()) {
      for (Index j = 0; j < generated.cols(); ++j) {
        columns.push_back("v" + std::to_string(j + 1));
      }
    }
    return Response::success(
        rows_payload(columns, generated.values, /*integral=*/true));
  }

  Response op_reconstruction_error(detail::Session& session, const json& args) {
    const detail::StoredModel& stored =
        get_model(session, detail::arg_string(args, "model"));
    const BinaryDataset& data =
        get_dataset(session, detail::arg_string(args, "data"));
    double value = 0.0;
    if (const auto* rbm = std::get_if<Rbm>(&stored.model)) {
      value = reconstruction_error(*rbm, data);
    } else if (const auto* dbm = std::get_if<Dbm>(&stored.model)) {
      value = reconstruction_error(*dbm, data);
    } else {
      throw OpError(errors::kBadRequest,
                    "reconstruction error is not defined for stacks");
    }
    return Response::success(scalar_payload(value));
  }

  Response op_ais_loglikelihood(detail::Session& session, const json& args,
                                const std::string& op) {
    const detail::StoredModel& stored =
        get_model(session, detail::arg_string(args, "model"));
    const BinaryDataset& data =
        get_dataset(session, detail::arg_string(args, "data"));
    const AisConfig cfg = ais_from_args(args);
    double value = 0.0;
    if (op == "rbm_loglikelihood") {
      const auto* rbm = std::get_if<Rbm>(&stored.model);
      if (rbm == nullptr) {
        throw OpError(errors::kBadRequest, "model is not an RBM");
      }
      value = ais_loglikelihood(*rbm, data, cfg, session.rng);
    } else {
      const auto* dbm = std::get_if<Dbm>(&stored.model);
      if (dbm == nullptr) {
        throw OpError(errors::kBadRequest, "model is not a DBM");
      }
      value = ais_loglikelihood(*dbm, data, cfg, session.rng);
    }
    return Response::success(scalar_payload(value));
  }

  Response op_exact_loglikelihood(detail::Session& session, const json& args) {
    const detail::StoredModel& stored =
        get_model(session, detail::arg_string(args, "model"));
    const BinaryDataset& data =
        get_dataset(session, detail::arg_string(args, "data"));
    double value = 0.0;
    if (const auto* rbm = std::get_if<Rbm>(&stored.model)) {
      value = exact_loglikelihood(*rbm, data);
    } else if (const auto* dbm = std::get_if<Dbm>(&stored.model)) {
      value = exact_loglikelihood(*dbm, data);
    } else {
      throw OpError(errors::kBadRequest,
                    "exact log-likelihood is not defined for stacks");
    }
    return Response::success(scalar_payload(value));
  }

  Response op_logproblowerbound(detail::Session& session, const json& args) {
    const detail::StoredModel& stored =
        get_model(session, detail::arg_string(args, "model"));
    const BinaryDataset& data =
        get_dataset(session, detail::arg_string(args, "data"));
    const auto* dbm = std::get_if<Dbm>(&stored.model);
    if (dbm == nullptr) {
      throw OpError(errors::kBadRequest, "model is not a DBM");
    }
    const AisConfig cfg = ais_from_args(args);
    const double value = logproblowerbound(*dbm, data, cfg, session.rng);
    return Response::success(scalar_payload(value));
  }

  Response op_top2latentdims(detail::Session& session, const json& args) {
    const detail::StoredModel& stored =
        get_model(session, detail::arg_string(args, "model"));
    const BinaryDataset& data =
        get_dataset(session, detail::arg_string(args, "data"));
    const auto* dbm = std::get_if<Dbm>(&stored.model);
    if (dbm == nullptr) {
      throw OpError(errors::kBadRequest, "model is not a DBM");
    }
    const Matrix coords = top2latentdims(*dbm, data);
    return Response::success(
        rows_payload({"dim1", "dim2"}, coords, /*integral=*/false));
  }

  Response op_export_model(detail::Session& session, const json& args) {
    if (!cfg_.allow_model_export) {
      return Response::error(
          errors::kExportDisabled,
          "model export is disabled by the data custodian of this site");
    }
    const detail::StoredModel& stored =
        get_model(session, detail::arg_string(args, "model"));
    std::string text;
    if (const auto* rbm = std::get_if<Rbm>(&stored.model)) {
      text = model_to_string(*rbm);
    } else if (const auto* dbm = std::get_if<Dbm>(&stored.model)) {
      text = model_to_string(*dbm);
    } else {
      throw OpError(errors::kBadRequest, "stacks cannot be exported");
    }
    return Response::success(
        json{{"format", "fedbm-model"}, {"text", std::move(text)}});
  }

  SiteConfig cfg_;
  TcpListener listener_;
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::mutex connections_mutex_;
  std::set<int> connection_fds_;
  std::atomic<bool> running_{false};
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<detail::Session>> sessions_;
  std::mt19937_64 token_engine_;
};

}  // namespace fedbm::fed
