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

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fedbm/experiment/metrics.hpp"
#include "fedbm/experiment/snp.hpp"
#include "fedbm/fed/client.hpp"
#include "fedbm/fed/server.hpp"
#include "fedbm/gibbs.hpp"
#include "fedbm/monitor.hpp"
#include "fedbm/train.hpp"

namespace fedbm::experiment {

enum class ScenarioMode { in_process, networked };

inline ScenarioMode scenario_mode_from_name(const std::string& s) {
  if (s == "in-process" || s == "inprocess") {
    return ScenarioMode::in_process;
  }
  if (s == "networked") {
    return ScenarioMode::networked;
  }
  throw std::invalid_argument("unknown scenario mode: " + s);
}

struct ScenarioResult {
  Index n_sites = 1;
  LabeledDataset original;
  BinaryDataset synthetic;
  std::map<std::string, MonitoringLog> per_site_logs;
  PatternMetrics metrics;
};

inline std::string site_label(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "site%03lld", static_cast<long long>(i + 1));
  return buf;
}

namespace detail {

// Per-site RNG streams are seeded as base + site_index, in both modes; the
// server-side equivalent is an explicit set_seed before training, so the
// two transports consume identical streams.
inline std::uint64_t scenario_base_seed(const TrainSpec& train) {
  return train.seed.value_or(1);
}

inline std::pair<BinaryDataset, MonitoringLog> train_and_sample_local(
    const BinaryDataset& site_data, TrainSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  spec.monitoring_datasets = {"D"};
  Rng rng(0);
  auto [dbm, log] = fitdbm(site_data, spec, {{"D", site_data}}, rng);
  BinaryDataset synth =
      samples(dbm, site_data.rows(), kDefaultBurninDbm, std::nullopt, rng);
  synth.column_names = site_data.column_names;
  return {std::move(synth), std::move(log)};
}

}  // namespace detail

/// Wire arguments of a remote fitdbm call equivalent to this TrainSpec
/// (plain layer sizes only; the session seed is set separately).
inline fed::json train_args_json(const TrainSpec& train) {
  fed::json nhiddens = fed::json::array();
  for (const LayerSpec& layer : train.layers) {
    require(!layer.partitioned() && !layer.learningrate && !layer.epochs,
            "scenario runner supports plain layer sizes only");
    nhiddens.push_back(layer.n_hidden);
  }
  fed::json args{{"data", "D"},
                 {"model", "dbm"},
                 {"nhiddens", std::move(nhiddens)},
                 {"epochs", train.epochs},
                 {"learningrate", train.learningrate},
                 {"epochspretraining", train.epochspretraining},
                 {"learningratepretraining", train.learningratepretraining},
                 {"batchsize", train.batchsize},
                 {"cdsteps", train.cdsteps},
                 {"nparticles", train.n_particles},
                 {"metric", metric_name(train.monitoring_metric)},
                 {"monitoringdata", fed::json::array({"D"})}};
  args["ais"] = fed::json{{"ntemperatures", train.monitoring_ais.ntemperatures},
                          {"nparticles", train.monitoring_ais.nparticles}};
  if (train.monitoring_ais.burnin) {
    args["ais"]["burnin"] = *train.monitoring_ais.burnin;
  }
  return args;
}

namespace detail {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("fedbm-scenario-" + std::to_string(::getpid()) + "-" +
                    std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace detail

/// Runs one full benchmark scenario: generate the data, split it
/// over n_sites, train one DBM per site, draw per-site synthetic sample
/// counts equal to the per-site originals, pool in site-label order, and
/// compute the recovery metrics. The networked mode spawns one real site
/// server per share on the loopback interface and drives everything through
/// the federation client; with equal seeds both modes produce identical
/// synthetic data.
inline ScenarioResult run_scenario(const SnpDataSpec& data_spec, Index n_sites,
                                   const TrainSpec& train, ScenarioMode mode) {
  train.validate();
  ScenarioResult result;
  result.n_sites = n_sites;
  result.original = gen_snp_data(data_spec);
  const std::vector<LabeledDataset> parts =
      partition_sites(result.original, n_sites, data_spec.seed + 1);
  const std::uint64_t base_seed = detail::scenario_base_seed(train);

  std::map<std::string, BinaryDataset> per_site;

  if (mode == ScenarioMode::in_process) {
    std::vector<std::future<std::pair<BinaryDataset, MonitoringLog>>> futures;
    futures.reserve(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      futures.push_back(std::async(std::launch::async,
                                   detail::train_and_sample_local,
                                   std::cref(parts[i].data), train,
                                   base_seed + static_cast<std::uint64_t>(i)));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) {
      auto [synth, log] = futures[i].get();
      const std::string label = site_label(static_cast<Index>(i));
      per_site.emplace(label, std::move(synth));
      result.per_site_logs.emplace(label, std::move(log));
    }
  } else {
    detail::TempDir root;
    std::vector<std::unique_ptr<fed::SiteServer>> servers;
    std::vector<fed::LoginRecord> records;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const std::string label = site_label(static_cast<Index>(i));
      const auto dir = root.path() / label;
      std::filesystem::create_directories(dir);
      save_dataset_csv(parts[i].data, (dir / "D.csv").string());
      fed::SiteConfig cfg;
      cfg.host = "127.0.0.1";
      cfg.port = 0;
      cfg.data_directory = dir.string();
      cfg.credentials = {{"researcher", "scenario-token"}};
      servers.push_back(std::make_unique<fed::SiteServer>(cfg));
      servers.back()->start();
      records.push_back({label,
                         "127.0.0.1:" + std::to_string(servers.back()->port()),
                         "researcher", "scenario-token", "D"});
    }
    fed::MultiSiteHandle handle = fed::MultiSiteHandle::login(records, true);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      handle.site(site_label(static_cast<Index>(i)))
          .call_ok("set_seed",
                   fed::json{{"seed", base_seed + static_cast<std::uint64_t>(i)}});
    }
    const auto train_results =
        handle.call_all("fitdbm", train_args_json(train));
    for (const auto& [label, payload] : train_results) {
      result.per_site_logs.emplace(label,
                                   fed::monitoring_from_payload(payload));
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const std::string label = site_label(static_cast<Index>(i));
      const fed::json payload = handle.site(label).call_ok(
          "samples", fed::json{{"model", "dbm"},
                               {"n", parts[i].data.rows()}});
      per_site.emplace(label, fed::dataset_from_rows_payload(payload));
    }
    handle.logout();
    for (auto& server : servers) {
      server->stop();
    }
  }

  result.synthetic = fed::pool_samples(per_site);
  result.metrics = pattern_metrics(result.original, result.synthetic);
  return result;
}

inline void save_metrics_csv(const std::vector<ScenarioResult>& results,
                             std::ostream& out) {
  out << "n_sites,marginal_max_abs_diff,pattern_recovery_rate,"
         "within_set_cooccurrence,between_set_cooccurrence,noise_rate\n";
  for (const ScenarioResult& r : results) {
    out << r.n_sites << "," << format_double(r.metrics.marginal_max_abs_diff)
        << "," << format_double(r.metrics.pattern_recovery_rate) << ","
        << format_double(r.metrics.within_set_cooccurrence) << ","
        << format_double(r.metrics.between_set_cooccurrence) << ","
        << format_double(r.metrics.noise_rate) << "\n";
  }
}

}  // namespace fedbm::experiment
