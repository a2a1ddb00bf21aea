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

// fedbm command line: run a site server, orchestrate remote DBM training,
// generate benchmark data, run the multi-site scenarios, and render reports.
//
// Exit codes: 0 success, 2 usage, 3 config/file IO, 4 remote/federation,
// 5 invalid input or model constraint, 1 internal error.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fedbm/ais.hpp"
#include "fedbm/dataset.hpp"
#include "fedbm/exact.hpp"
#include "fedbm/experiment/cluster.hpp"
#include "fedbm/experiment/heatmap.hpp"
#include "fedbm/experiment/metrics.hpp"
#include "fedbm/experiment/scenario.hpp"
#include "fedbm/experiment/snp.hpp"
#include "fedbm/fed/client.hpp"
#include "fedbm/fed/config.hpp"
#include "fedbm/fed/server.hpp"
#include "fedbm/plot.hpp"
#include "fedbm/train.hpp"

namespace fs = std::filesystem;
using fedbm::fed::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitRemote = 4;
constexpr int kExitInvalid = 5;

std::atomic<bool> g_stop_requested{false};

void handle_stop_signal(int) { g_stop_requested = true; }

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

/// Reproducibility manifest: the resolved configuration of an
/// artifact-producing run. Re-running the recorded argv reproduces the
/// outputs bit-identically (in-process mode).
void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const std::vector<std::string>& argv, json options) {
  json manifest{{"tool", "fedbm"},
                {"version", FEDBM_VERSION},
                {"subcommand", subcommand},
                {"argv", argv},
                {"options", std::move(options)}};
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> collect_argv(int argc, char** argv) {
  return {argv, argv + argc};
}

/// Relative input paths fall back to $FEDBM_CONFIG_DIR when they do not
/// resolve from the working directory.
std::string resolve_input_path(const std::string& path) {
  if (path.empty() || path.front() == '/' || fs::exists(path)) {
    return path;
  }
  const char* dir = std::getenv("FEDBM_CONFIG_DIR");
  if (dir != nullptr && *dir != '\0') {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) {
      return candidate.string();
    }
  }
  return path;
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

// --- options shared by the training-like subcommands -------------------------

struct TrainOptions {
  std::vector<long long> nhiddens{50, 25, 15};
  int epochs = 100;
  double learningrate = 0.05;
  int pretrain_epochs = 30;
  double pretrain_lr = 0.005;
  int batchsize = 1;
  int cdsteps = 1;
  int nparticles = 0;
  std::string metric = "reconstruction_error";
  int ais_temps = 100;
  int ais_particles = 100;
  std::optional<int> ais_burnin;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--nhiddens", nhiddens,
                    "hidden layer sizes, e.g. 50,25,15")
        ->delimiter(',');
    cmd->add_option("--epochs", epochs, "fine-tuning epochs");
    cmd->add_option("--learningrate", learningrate, "fine-tuning learning rate");
    cmd->add_option("--pretrain-epochs", pretrain_epochs, "pretraining epochs");
    cmd->add_option("--pretrain-lr", pretrain_lr, "pretraining learning rate");
    cmd->add_option("--batchsize", batchsize, "minibatch size");
    cmd->add_option("--cdsteps", cdsteps, "contrastive divergence steps");
    cmd->add_option("--nparticles", nparticles,
                    "persistent particles (0: batchsize)");
    cmd->add_option("--monitor-metric", metric,
                    "reconstruction_error | logproblowerbound | "
                    "ais_loglikelihood | exact_loglikelihood");
    cmd->add_option("--ais-temps", ais_temps, "AIS temperatures (monitoring)");
    cmd->add_option("--ais-particles", ais_particles,
                    "AIS particles (monitoring)");
    cmd->add_option("--ais-burnin", ais_burnin,
                    "AIS transitions per temperature (monitoring)");
  }

  fedbm::TrainSpec to_spec() const {
    fedbm::TrainSpec spec;
    for (long long nh : nhiddens) {
      spec.layers.emplace_back(static_cast<fedbm::Index>(nh));
    }
    spec.epochs = epochs;
    spec.learningrate = learningrate;
    spec.epochspretraining = pretrain_epochs;
    spec.learningratepretraining = pretrain_lr;
    spec.batchsize = batchsize;
    spec.cdsteps = cdsteps;
    spec.n_particles = nparticles;
    spec.monitoring_metric = fedbm::metric_from_name(metric);
    spec.monitoring_ais =
        fedbm::AisConfig(ais_temps, ais_particles);
    if (ais_burnin) {
      spec.monitoring_ais.burnin = *ais_burnin;
    }
    spec.validate();
    return spec;
  }

  json to_json() const {
    return json{{"nhiddens", nhiddens},
                {"epochs", epochs},
                {"learningrate", learningrate},
                {"pretrain_epochs", pretrain_epochs},
                {"pretrain_lr", pretrain_lr},
                {"batchsize", batchsize},
                {"cdsteps", cdsteps},
                {"nparticles", nparticles},
                {"metric", metric},
                {"ais_temps", ais_temps},
                {"ais_particles", ais_particles}};
  }
};

// --- handle files -------------------------------------------------------------

struct HandleFile {
  std::vector<std::pair<fedbm::fed::LoginRecord, std::string>> sessions;
  double timeout = fedbm::fed::MultiSiteHandle::kDefaultTimeoutSeconds;
};

void save_handle(const fs::path& path,
                 const std::vector<fedbm::fed::LoginRecord>& records,
                 const std::vector<std::string>& tokens, double timeout) {
  json sites = json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    sites.push_back(json{{"server", records[i].server},
                         {"url", records[i].url},
                         {"user", records[i].user},
                         {"table", records[i].table},
                         {"session", tokens[i]}});
  }
  write_text_file(path,
                  json{{"sites", sites}, {"timeout", timeout}}.dump(2) + "\n");
}

HandleFile load_handle(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open handle file: " + path);
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("sites")) {
    throw std::invalid_argument("malformed handle file: " + path);
  }
  HandleFile handle;
  handle.timeout = j.value("timeout", handle.timeout);
  for (const auto& site : j["sites"]) {
    fedbm::fed::LoginRecord record;
    record.server = site.at("server").get<std::string>();
    record.url = site.at("url").get<std::string>();
    record.user = site.value("user", "");
    record.table = site.value("table", "");
    handle.sessions.emplace_back(record,
                                 site.at("session").get<std::string>());
  }
  return handle;
}

void write_monitoring_outputs(
    const fs::path& out_dir,
    const std::map<std::string, fedbm::MonitoringLog>& logs,
    const std::string& csv_name) {
  std::ofstream csv(out_dir / csv_name);
  csv << "site,epoch,metric,dataset,value\n";
  for (const auto& [site, log] : logs) {
    for (const auto& e : log.entries) {
      csv << site << "," << e.epoch << "," << fedbm::metric_name(e.metric)
          << "," << e.dataset_label << "," << fedbm::format_double(e.value)
          << "\n";
    }
  }
}

// --- subcommand implementations ------------------------------------------------

int run_serve(const std::string& config_path) {
  fedbm::fed::SiteConfig cfg = fedbm::fed::load_site_config(config_path);
  fedbm::fed::SiteServer server(cfg);
  server.start();
  std::cout << "site server listening on " << cfg.host << ":" << server.port()
            << " (data: " << cfg.data_directory << ")" << std::endl;
  struct sigaction sa {};
  sa.sa_handler = handle_stop_signal;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
  while (!g_stop_requested) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
  server.stop();
  std::cout << "site server stopped" << std::endl;
  return kExitOk;
}

int run_gen_data(const fedbm::experiment::SnpDataSpec& spec,
                 const std::string& out,
                 const std::vector<std::string>& argv) {
  const fs::path out_dir = prepare_out_dir(out);
  const fedbm::experiment::LabeledDataset data =
      fedbm::experiment::gen_snp_data(spec);
  fedbm::save_dataset_csv(data.data, (out_dir / "data.csv").string());

  json pattern_sets = json::array();
  for (const auto& set : data.pattern_columns) {
    pattern_sets.push_back(set);
  }
  json labels = json::array();
  for (bool c : data.is_case) {
    labels.push_back(c ? "case" : "control");
  }
  write_text_file(out_dir / "meta.json",
                  json{{"labels", labels}, {"pattern_columns", pattern_sets}}
                          .dump(2) +
                      "\n");
  write_manifest(out_dir, "gen-data", argv,
                 json{{"samples", spec.n_samples},
                      {"variables", spec.n_variables},
                      {"patterns", spec.n_patterns},
                      {"pattern_size", spec.pattern_size},
                      {"noise", spec.noise_p},
                      {"seed", spec.seed}});
  std::cout << "wrote " << (out_dir / "data.csv").string() << " ("
            << data.data.rows() << "x" << data.data.cols() << ")" << std::endl;
  return kExitOk;
}

int run_train(const std::string& logins_path, const TrainOptions& train,
              double split_ratio, std::uint64_t seed,
              const std::string& model_label, const std::string& out,
              bool logout, double timeout,
              const std::vector<std::string>& argv) {
  const fs::path out_dir = prepare_out_dir(out);
  const auto records = fedbm::fed::load_logins_csv(logins_path);
  fedbm::fed::MultiSiteHandle handle =
      fedbm::fed::MultiSiteHandle::login(records, true, timeout);

  handle.call_all("set_seed", json{{"seed", seed}});
  handle.call_all("splitdata", json{{"data", "D"},
                                    {"ratio", split_ratio},
                                    {"part1", "D.Train"},
                                    {"part2", "D.Test"}});
  json args = fedbm::experiment::train_args_json(train.to_spec());
  args["data"] = "D.Train";
  args["model"] = model_label;
  args["monitoringdata"] = json::array({"D.Train", "D.Test"});
  const auto results = handle.call_all("fitdbm", args);

  std::map<std::string, fedbm::MonitoringLog> logs;
  for (const auto& [site, payload] : results) {
    logs.emplace(site, fedbm::fed::monitoring_from_payload(payload));
  }
  write_monitoring_outputs(out_dir, logs, "monitoring.csv");
  for (const auto& [site, log] : logs) {
    std::ofstream svg(out_dir / ("monitoring_" + site + ".svg"));
    fedbm::save_monitoring_svg(log, svg, "training (" + site + ")");
  }

  std::vector<std::string> tokens;
  for (const std::string& label : handle.labels()) {
    tokens.push_back(handle.site(label).session_token());
  }
  if (logout) {
    handle.logout();
  } else {
    save_handle(out_dir / "handle.json", records, tokens, timeout);
  }
  write_manifest(out_dir, "train", argv,
                 json{{"logins", logins_path},
                      {"split", split_ratio},
                      {"seed", seed},
                      {"model", model_label},
                      {"logout", logout},
                      {"train", train.to_json()}});
  std::cout << "trained '" << model_label << "' on " << handle.labels().size()
            << " site(s); monitoring in " << (out_dir / "monitoring.csv")
            << std::endl;
  return kExitOk;
}

std::optional<fedbm::Clamp> parse_conditioned(const std::string& text) {
  if (text.empty()) {
    return std::nullopt;
  }
  fedbm::Clamp clamp;
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(
          "conditioned entries must look like index=value");
    }
    clamp.indices.push_back(std::stoll(item.substr(0, eq)));
    values.push_back(std::stod(item.substr(eq + 1)));
  }
  clamp.values = Eigen::Map<fedbm::Vector>(values.data(),
                                           static_cast<fedbm::Index>(values.size()));
  return clamp;
}

int run_sample(const std::string& handle_path, const std::string& model_label,
               long long n, std::optional<long long> burnin,
               const std::string& conditioned, const std::string& out,
               bool logout, const std::vector<std::string>& argv) {
  const fs::path out_dir = prepare_out_dir(out);
  HandleFile hf = load_handle(handle_path);
  fedbm::fed::MultiSiteHandle handle =
      fedbm::fed::MultiSiteHandle::attach(hf.sessions, hf.timeout);

  json args{{"model", model_label}, {"n", n}};
  if (burnin) {
    args["burnin"] = *burnin;
  }
  if (const auto clamp = parse_conditioned(conditioned)) {
    json indices = json::array();
    json values = json::array();
    for (std::size_t k = 0; k < clamp->indices.size(); ++k) {
      indices.push_back(clamp->indices[k]);
      values.push_back(clamp->values(static_cast<fedbm::Index>(k)));
    }
    args["conditioned_on"] = json{{"indices", indices}, {"values", values}};
  }
  const auto results = handle.call_all("samples", args);
  std::map<std::string, fedbm::BinaryDataset> per_site;
  for (const auto& [site, payload] : results) {
    per_site.emplace(site, fedbm::fed::dataset_from_rows_payload(payload));
  }
  const fedbm::BinaryDataset pooled = fedbm::fed::pool_samples(per_site);
  fedbm::save_dataset_csv(pooled, (out_dir / "samples.csv").string());
  if (logout) {
    handle.logout();
  }
  write_manifest(out_dir, "sample", argv,
                 json{{"handle", handle_path},
                      {"model", model_label},
                      {"n", n},
                      {"conditioned", conditioned},
                      {"logout", logout}});
  std::cout << "wrote " << pooled.rows() << " pooled synthetic rows to "
            << (out_dir / "samples.csv") << std::endl;
  return kExitOk;
}

int run_evaluate(const std::string& handle_path, const std::string& model_label,
                 const std::string& model_type, const std::string& data_label,
                 const std::string& metric, int ais_temps, int ais_particles,
                 std::optional<int> ais_burnin, const std::string& out,
                 bool logout, const std::vector<std::string>& argv) {
  const fs::path out_dir = prepare_out_dir(out);
  HandleFile hf = load_handle(handle_path);
  fedbm::fed::MultiSiteHandle handle =
      fedbm::fed::MultiSiteHandle::attach(hf.sessions, hf.timeout);

  std::string op;
  if (metric == "loglikelihood" || metric == "ais_loglikelihood") {
    op = model_type == "rbm" ? "rbm_loglikelihood" : "dbm_loglikelihood";
  } else if (metric == "exact" || metric == "exact_loglikelihood") {
    op = "exact_loglikelihood";
  } else if (metric == "lowerbound" || metric == "logproblowerbound") {
    op = "logproblowerbound";
  } else if (metric == "reconstruction" || metric == "reconstruction_error") {
    op = "reconstruction_error";
  } else {
    throw std::invalid_argument("unknown evaluation metric: " + metric);
  }
  json args{{"model", model_label},
            {"data", data_label},
            {"ntemperatures", ais_temps},
            {"nparticles", ais_particles}};
  if (ais_burnin) {
    args["burnin"] = *ais_burnin;
  }
  const auto results = handle.call_all(op, args);
  std::ofstream csv(out_dir / "evaluation.csv");
  csv << "site,metric,dataset,value\n";
  for (const auto& [site, payload] : results) {
    csv << site << "," << op << "," << data_label << ","
        << fedbm::format_double(payload.at("value").get<double>()) << "\n";
    std::cout << site << " " << op << "(" << data_label
              << ") = " << payload.at("value").get<double>() << std::endl;
  }
  if (logout) {
    handle.logout();
  }
  write_manifest(out_dir, "evaluate", argv,
                 json{{"handle", handle_path},
                      {"model", model_label},
                      {"data", data_label},
                      {"metric", metric},
                      {"ais_temps", ais_temps},
                      {"ais_particles", ais_particles},
                      {"logout", logout}});
  return kExitOk;
}

int run_experiment(const fedbm::experiment::SnpDataSpec& data_spec,
                   const std::vector<long long>& sites,
                   const TrainOptions& train, std::uint64_t train_seed,
                   const std::string& mode_name, const std::string& out,
                   const std::vector<std::string>& argv) {
  const fs::path out_dir = prepare_out_dir(out);
  const auto mode = fedbm::experiment::scenario_mode_from_name(mode_name);
  fedbm::TrainSpec spec = train.to_spec();
  spec.seed = train_seed;

  std::vector<fedbm::experiment::ScenarioResult> results;
  for (long long n_sites : sites) {
    std::cout << "running scenario with " << n_sites << " site(s)..."
              << std::endl;
    results.push_back(fedbm::experiment::run_scenario(
        data_spec, static_cast<fedbm::Index>(n_sites), spec, mode));
    const auto& r = results.back();
    fedbm::save_dataset_csv(
        r.synthetic,
        (out_dir / ("synthetic_" + std::to_string(n_sites) + "sites.csv"))
            .string());
    write_monitoring_outputs(
        out_dir, r.per_site_logs,
        "monitoring_" + std::to_string(n_sites) + "sites.csv");
    std::cout << "  marginal diff " << r.metrics.marginal_max_abs_diff
              << ", recovery " << r.metrics.pattern_recovery_rate
              << ", noise " << r.metrics.noise_rate << std::endl;
  }
  fedbm::save_dataset_csv(results.front().original.data,
                          (out_dir / "original.csv").string());
  std::ofstream metrics_csv(out_dir / "metrics.csv");
  fedbm::experiment::save_metrics_csv(results, metrics_csv);

  json sites_json = json::array();
  for (long long s : sites) {
    sites_json.push_back(s);
  }
  write_manifest(out_dir, "experiment", argv,
                 json{{"sites", sites_json},
                      {"mode", mode_name},
                      {"data",
                       json{{"samples", data_spec.n_samples},
                            {"variables", data_spec.n_variables},
                            {"patterns", data_spec.n_patterns},
                            {"pattern_size", data_spec.pattern_size},
                            {"noise", data_spec.noise_p},
                            {"seed", data_spec.seed}}},
                      {"train_seed", train_seed},
                      {"train", train.to_json()}});
  std::cout << "metrics table: " << (out_dir / "metrics.csv") << std::endl;
  return kExitOk;
}

int run_report(const std::string& dir, const std::string& out,
               const std::vector<std::string>& argv) {
  const fs::path in_dir(dir);
  const fs::path out_dir = prepare_out_dir(out.empty() ? dir : out);
  if (!fs::exists(in_dir / "original.csv")) {
    throw std::runtime_error("no original.csv under " + dir +
                             " (run the experiment subcommand first)");
  }
  std::vector<std::pair<std::string, fs::path>> datasets;
  datasets.emplace_back("original", in_dir / "original.csv");
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("synthetic_", 0) == 0 && entry.path().extension() == ".csv") {
      datasets.emplace_back(entry.path().stem().string(), entry.path());
    }
  }
  std::sort(datasets.begin() + 1, datasets.end());
  for (const auto& [name, path] : datasets) {
    const fedbm::BinaryDataset data = fedbm::load_dataset_csv(path.string());
    const auto order = fedbm::experiment::hierarchical_order(data);
    const fs::path img = out_dir / (name + ".ppm");
    fedbm::experiment::render_heatmap(data, order, img.string());
    std::cout << "rendered " << img << std::endl;
  }
  if (fs::exists(in_dir / "metrics.csv")) {
    std::ifstream metrics(in_dir / "metrics.csv");
    std::ofstream table(out_dir / "metrics_table.txt");
    std::string line;
    while (std::getline(metrics, line)) {
      std::stringstream row(line);
      std::string field;
      while (std::getline(row, field, ',')) {
        table << field;
        table << std::string(field.size() < 26 ? 26 - field.size() : 1, ' ');
      }
      table << "\n";
    }
  }
  write_manifest(out_dir, "report", argv, json{{"dir", dir}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated deep Boltzmann machines for synthetic binary data"};
  app.require_subcommand(1);
  const auto argv_copy = collect_argv(argc, argv);

  // serve
  auto* serve = app.add_subcommand("serve", "run a data-holding site server");
  std::string serve_config;
  serve->add_option("--config", serve_config, "site config file")->required();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate SNP-like benchmark data");
  fedbm::experiment::SnpDataSpec snp_spec;
  std::string gen_out = "out";
  gen->add_option("--samples", snp_spec.n_samples, "number of rows");
  gen->add_option("--variables", snp_spec.n_variables, "number of variables");
  gen->add_option("--patterns", snp_spec.n_patterns, "number of SNP sets");
  gen->add_option("--pattern-size", snp_spec.pattern_size, "ones per SNP set");
  gen->add_option("--noise", snp_spec.noise_p, "Bernoulli noise probability");
  gen->add_option("--seed", snp_spec.seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory");

  // train
  auto* train_cmd = app.add_subcommand(
      "train", "remote DBM training: login, split, fit, monitor");
  std::string train_logins;
  TrainOptions train_opts;
  double split_ratio = 0.2;
  std::uint64_t train_seed = 1;
  std::string train_model = "dbm";
  std::string train_out = "out";
  bool train_logout = false;
  double timeout = fedbm::fed::MultiSiteHandle::kDefaultTimeoutSeconds;
  train_cmd->add_option("--logins", train_logins,
                        "CSV with server,url,user,password,table")
      ->required();
  train_opts.add_flags(train_cmd);
  train_cmd->add_option("--split", split_ratio,
                        "held-out fraction for the test split");
  train_cmd->add_option("--seed", train_seed, "seed broadcast to the sites");
  train_cmd->add_option("--model-label", train_model,
                        "server-side label for the trained model");
  train_cmd->add_option("--out", train_out, "output directory");
  train_cmd->add_option("--timeout", timeout, "per-request timeout (seconds)");
  train_cmd->add_flag("--logout", train_logout,
                      "end the sessions instead of writing handle.json");

  // sample
  auto* sample_cmd =
      app.add_subcommand("sample", "draw synthetic rows from trained models");
  std::string sample_handle = "out/handle.json";
  std::string sample_model = "dbm";
  long long sample_n = 100;
  std::optional<long long> sample_burnin;
  std::string sample_conditioned;
  std::string sample_out = "out";
  bool sample_logout = false;
  sample_cmd->add_option("--handle", sample_handle, "handle file from train");
  sample_cmd->add_option("--model", sample_model, "model label");
  sample_cmd->add_option("--n", sample_n, "samples per site");
  sample_cmd->add_option("--burnin", sample_burnin, "Gibbs burn-in");
  sample_cmd->add_option("--conditioned", sample_conditioned,
                         "clamped columns, e.g. 0=1,5=0 (0-based)");
  sample_cmd->add_option("--out", sample_out, "output directory");
  sample_cmd->add_flag("--logout", sample_logout, "end the sessions after");

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "run AIS/exact evaluations on the sites");
  std::string eval_handle = "out/handle.json";
  std::string eval_model = "dbm";
  std::string eval_model_type = "dbm";
  std::string eval_data = "D.Test";
  std::string eval_metric = "loglikelihood";
  int eval_temps = 100;
  int eval_particles = 100;
  std::optional<int> eval_burnin;
  std::string eval_out = "out";
  bool eval_logout = false;
  eval_cmd->add_option("--handle", eval_handle, "handle file from train");
  eval_cmd->add_option("--model", eval_model, "model label");
  eval_cmd->add_option("--model-type", eval_model_type, "rbm | dbm");
  eval_cmd->add_option("--data", eval_data, "dataset label");
  eval_cmd->add_option("--metric", eval_metric,
                       "loglikelihood | lowerbound | exact | reconstruction");
  eval_cmd->add_option("--ais-temps", eval_temps, "AIS temperatures");
  eval_cmd->add_option("--ais-particles", eval_particles, "AIS particles");
  eval_cmd->add_option("--ais-burnin", eval_burnin, "AIS burn-in");
  eval_cmd->add_option("--out", eval_out, "output directory");
  eval_cmd->add_flag("--logout", eval_logout, "end the sessions after");

  // experiment
  auto* exp_cmd = app.add_subcommand(
      "experiment", "multi-site scenario: generate, split, train, pool");
  std::vector<long long> exp_sites{1, 2, 20};
  TrainOptions exp_train;
  std::uint64_t exp_train_seed = 1;
  std::string exp_mode = "in-process";
  std::string exp_out = "out";
  exp_cmd->add_option("--sites", exp_sites, "site counts, e.g. 1,2,20")
      ->delimiter(',');
  exp_cmd->add_option("--samples", snp_spec.n_samples, "number of rows");
  exp_cmd->add_option("--variables", snp_spec.n_variables, "number of variables");
  exp_cmd->add_option("--patterns", snp_spec.n_patterns, "number of SNP sets");
  exp_cmd->add_option("--pattern-size", snp_spec.pattern_size, "ones per set");
  exp_cmd->add_option("--noise", snp_spec.noise_p, "noise probability");
  exp_cmd->add_option("--data-seed", snp_spec.seed, "data generator seed");
  exp_train.add_flags(exp_cmd);
  exp_cmd->add_option("--seed", exp_train_seed, "base training seed");
  exp_cmd->add_option("--mode", exp_mode, "in-process | networked");
  exp_cmd->add_option("--out", exp_out, "output directory");

  // report
  auto* report_cmd = app.add_subcommand(
      "report", "render clustered heatmaps and the metrics table");
  std::string report_dir = "out";
  std::string report_out;
  report_cmd->add_option("--dir", report_dir, "experiment output directory");
  report_cmd->add_option("--out", report_out,
                         "report output directory (default: --dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*serve) {
      return run_serve(resolve_input_path(serve_config));
    }
    if (*gen) {
      return run_gen_data(snp_spec, gen_out, argv_copy);
    }
    if (*train_cmd) {
      return run_train(resolve_input_path(train_logins), train_opts, split_ratio, train_seed,
                       train_model, train_out, train_logout, timeout,
                       argv_copy);
    }
    if (*sample_cmd) {
      return run_sample(resolve_input_path(sample_handle), sample_model, sample_n, sample_burnin,
                        sample_conditioned, sample_out, sample_logout,
                        argv_copy);
    }
    if (*eval_cmd) {
      return run_evaluate(resolve_input_path(eval_handle), eval_model, eval_model_type, eval_data,
                          eval_metric, eval_temps, eval_particles, eval_burnin,
                          eval_out, eval_logout, argv_copy);
    }
    if (*exp_cmd) {
      return run_experiment(snp_spec, exp_sites, exp_train, exp_train_seed,
                            exp_mode, exp_out, argv_copy);
    }
    if (*report_cmd) {
      return run_report(report_dir, report_out, argv_copy);
    }
  } catch (const fedbm::fed::RemoteError& e) {
    std::cerr << "remote error: " << e.what() << std::endl;
    return kExitRemote;
  } catch (const fedbm::fed::SocketError& e) {
    std::cerr << "connection error: " << e.what() << std::endl;
    return kExitRemote;
  } catch (const fedbm::ModelTooLargeError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitInvalid;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return kExitInternal;
  }
  return kExitUsage;
}
