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

#include <set>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/experiment/snp.hpp"
#include "fedbm/numeric.hpp"

namespace fedbm::experiment {

/// Quantifies how well synthetic data preserves the planted structure.
struct PatternMetrics {
  double marginal_max_abs_diff = 0.0;
  double pattern_recovery_rate = 0.0;
  double within_set_cooccurrence = 0.0;
  double between_set_cooccurrence = 0.0;
  double noise_rate = 0.0;
};

namespace detail {

inline bool has_complete_set(const Matrix& values, Index row,
                             const std::vector<std::vector<Index>>& sets) {
  for (const auto& set : sets) {
    bool complete = true;
    for (Index c : set) {
      if (values(row, c) != 1.0) {
        complete = false;
        break;
      }
    }
    if (complete) {
      return true;
    }
  }
  return false;
}

// Mean pairwise co-occurrence lift p_ij / (p_i p_j) over the given column
// pairs; pairs with a vanishing denominator contribute zero.
inline double mean_lift(const Matrix& values,
                        const std::vector<std::pair<Index, Index>>& pairs) {
  if (pairs.empty()) {
    return 0.0;
  }
  const double n = static_cast<double>(values.rows());
  double sum = 0.0;
  for (const auto& [i, j] : pairs) {
    const double pi = values.col(i).sum() / n;
    const double pj = values.col(j).sum() / n;
    const double pij = values.col(i).cwiseProduct(values.col(j)).sum() / n;
    sum += (pi * pj) > 0.0 ? pij / (pi * pj) : 0.0;
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace detail

/// (a) max column-marginal deviation, (b) fraction of synthetic rows with at
/// least one complete pattern set, (c/d) mean within-set vs between-set
/// co-occurrence lift in the synthetic data, (e) ones-fraction outside all
/// pattern sets among the rows without a complete set.
inline PatternMetrics pattern_metrics(const LabeledDataset& original,
                                      const BinaryDataset& synthetic) {
  require(original.data.cols() == synthetic.cols(),
          "original and synthetic column counts differ");
  const Matrix& orig = original.data.values;
  const Matrix& synth = synthetic.values;
  require(orig.rows() >= 1 && synth.rows() >= 1, "empty data");
  const auto& sets = original.pattern_columns;

  PatternMetrics m;
  for (Index j = 0; j < orig.cols(); ++j) {
    m.marginal_max_abs_diff = std::max(
        m.marginal_max_abs_diff,
        std::abs(orig.col(j).mean() - synth.col(j).mean()));
  }

  Index recovered = 0;
  for (Index i = 0; i < synth.rows(); ++i) {
    recovered += detail::has_complete_set(synth, i, sets) ? 1 : 0;
  }
  m.pattern_recovery_rate =
      static_cast<double>(recovered) / static_cast<double>(synth.rows());

  std::vector<std::pair<Index, Index>> within;
  std::vector<std::pair<Index, Index>> between;
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t i = 0; i < sets[a].size(); ++i) {
      for (std::size_t j = i + 1; j < sets[a].size(); ++j) {
        within.emplace_back(sets[a][i], sets[a][j]);
      }
    }
    for (std::size_t b = a + 1; b < sets.size(); ++b) {
      for (Index ci : sets[a]) {
        for (Index cj : sets[b]) {
          between.emplace_back(ci, cj);
        }
      }
    }
  }
  m.within_set_cooccurrence = detail::mean_lift(synth, within);
  m.between_set_cooccurrence = detail::mean_lift(synth, between);

  std::set<Index> pattern_cols;
  for (const auto& set : sets) {
    pattern_cols.insert(set.begin(), set.end());
  }
  double ones = 0.0;
  double cells = 0.0;
  for (Index i = 0; i < synth.rows(); ++i) {
    if (detail::has_complete_set(synth, i, sets)) {
      continue;
    }
    for (Index j = 0; j < synth.cols(); ++j) {
      if (pattern_cols.count(j) > 0) {
        continue;
      }
      cells += 1.0;
      ones += synth(i, j);
    }
  }
  m.noise_rate = cells > 0.0 ? ones / cells : 0.0;
  return m;
}

/// Analytic recovery rate of structureless Bernoulli(p) noise: the chance a
/// random row completes at least one of the disjoint pattern sets.
inline double noise_baseline_recovery_rate(Index n_patterns,
                                           Index pattern_size, double p) {
  const double per_set = std::pow(p, static_cast<double>(pattern_size));
  return 1.0 - std::pow(1.0 - per_set, static_cast<double>(n_patterns));
}

}  // namespace fedbm::experiment
