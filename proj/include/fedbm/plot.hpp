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

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "fedbm/monitor.hpp"
#include "fedbm/numeric.hpp"

namespace fedbm {

/// Hand-written SVG line chart of a monitoring log: one polyline per
/// (metric, dataset label) series over the epochs.
inline void save_monitoring_svg(const MonitoringLog& log, std::ostream& out,
                                const std::string& title = "monitoring") {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::map<std::string, std::vector<std::pair<int, double>>> series;
  int max_epoch = 1;
  double lo = 0.0;
  double hi = 1.0;
  bool first = true;
  for (const auto& e : log.entries) {
    series[std::string(metric_name(e.metric)) + " / " + e.dataset_label]
        .emplace_back(e.epoch, e.value);
    max_epoch = std::max(max_epoch, e.epoch);
    if (first) {
      lo = hi = e.value;
      first = false;
    } else {
      lo = std::min(lo, e.value);
      hi = std::max(hi, e.value);
    }
  }
  if (hi == lo) {
    hi = lo + 1.0;
  }

  const double width = 880;
  const double height = 460;
  const double ml = 70, mr = 240, mt = 40, mb = 50;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  auto x_of = [&](double epoch) {
    return ml + pw * (max_epoch > 1 ? (epoch - 1.0) / (max_epoch - 1.0) : 0.5);
  };
  auto y_of = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"16\">" << title << "</text>\n";
  // Axes.
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"middle\">epoch</text>\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", hi);
  out << "<text x=\"" << ml - 8 << "\" y=\"" << mt + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"end\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.4g", lo);
  out << "<text x=\"" << ml - 8 << "\" y=\"" << mt + ph + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"end\">" << buf << "</text>\n";
  out << "<text x=\"" << ml << "\" y=\"" << mt + ph + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">1</text>\n";
  out << "<text x=\"" << ml + pw << "\" y=\"" << mt + ph + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"end\">" << max_epoch << "</text>\n";

  std::size_t k = 0;
  for (const auto& [name, points] : series) {
    const char* color = palette[k % (sizeof(palette) / sizeof(palette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [epoch, value] : points) {
      out << x_of(epoch) << "," << y_of(value) << " ";
    }
    out << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(k);
    out << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\""
        << ml + pw + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw + 36 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << name
        << "</text>\n";
    ++k;
  }
  out << "</svg>\n";
}

}  // namespace fedbm
