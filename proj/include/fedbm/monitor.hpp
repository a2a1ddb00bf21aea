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

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "fedbm/numeric.hpp"

namespace fedbm {

enum class Metric {
  reconstruction_error,
  exact_loglikelihood,
  ais_loglikelihood,
  logproblowerbound,
};

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::reconstruction_error: return "reconstruction_error";
    case Metric::exact_loglikelihood: return "exact_loglikelihood";
    case Metric::ais_loglikelihood: return "ais_loglikelihood";
    case Metric::logproblowerbound: return "logproblowerbound";
  }
  return "unknown";
}

inline Metric metric_from_name(const std::string& s) {
  if (s == "reconstruction_error") return Metric::reconstruction_error;
  if (s == "exact_loglikelihood") return Metric::exact_loglikelihood;
  if (s == "ais_loglikelihood") return Metric::ais_loglikelihood;
  if (s == "logproblowerbound") return Metric::logproblowerbound;
  throw std::invalid_argument("unknown monitoring metric: " + s);
}

struct MonitoringEntry {
  int epoch = 0;
  Metric metric = Metric::reconstruction_error;
  std::string dataset_label;
  double value = 0.0;

  bool operator==(const MonitoringEntry&) const = default;
};

/// Privacy-safe scalar metric series collected during training. Holds only
/// per-epoch aggregates; never per-row values, never model parameters.
struct MonitoringLog {
  std::vector<MonitoringEntry> entries;

  void append(int epoch, Metric metric, const std::string& label, double value) {
    entries.push_back({epoch, metric, label, value});
  }

  void append(const MonitoringLog& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  }

  bool operator==(const MonitoringLog&) const = default;
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void save_monitoring_csv(const MonitoringLog& log, std::ostream& out,
                                const std::string& site_label = "") {
  out << (site_label.empty() ? "epoch,metric,dataset,value\n"
                             : "site,epoch,metric,dataset,value\n");
  for (const auto& e : log.entries) {
    if (!site_label.empty()) {
      out << site_label << ",";
    }
    out << e.epoch << "," << metric_name(e.metric) << "," << e.dataset_label
        << "," << format_double(e.value) << "\n";
  }
}

}  // namespace fedbm
