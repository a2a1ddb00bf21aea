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
#include <numeric>
#include <string>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/numeric.hpp"
#include "fedbm/rng.hpp"

namespace fedbm::experiment {

/// Benchmark generator settings: binary data that is mostly zero, with
/// groups of `pattern_size` co-occurring ones at `n_patterns` disjoint
/// column sets among the cases, plus Bernoulli noise everywhere.
struct SnpDataSpec {
  Index n_samples = 500;
  Index n_variables = 50;
  Index n_patterns = 5;
  Index pattern_size = 5;
  double noise_p = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    require(n_samples >= 1 && n_variables >= 1, "sizes must be positive");
    require(n_patterns >= 1 && pattern_size >= 1, "patterns must be positive");
    require(n_patterns * pattern_size <= n_variables,
            "patterns do not fit into the variables");
    require(noise_p >= 0.0 && noise_p <= 1.0, "noise probability in [0,1]");
  }
};

struct LabeledDataset {
  BinaryDataset data;
  std::vector<bool> is_case;                  // per row
  std::vector<std::vector<Index>> pattern_columns;  // one set per pattern

  Index n_cases() const {
    Index n = 0;
    for (bool c : is_case) {
      n += c ? 1 : 0;
    }
    return n;
  }
};

/// Generates the benchmark data: the first half of the rows are cases, each
/// carrying one uniformly chosen pattern set; noise is OR-ed on top (cells
/// flip to one with probability noise_p, never back to zero).
inline LabeledDataset gen_snp_data(const SnpDataSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Index n = spec.n_samples;
  const Index m = spec.n_variables;
  const Index n_cases = n / 2;

  LabeledDataset out;
  out.pattern_columns.resize(static_cast<std::size_t>(spec.n_patterns));
  for (Index p = 0; p < spec.n_patterns; ++p) {
    for (Index k = 0; k < spec.pattern_size; ++k) {
      out.pattern_columns[static_cast<std::size_t>(p)].push_back(
          p * spec.pattern_size + k);
    }
  }

  Matrix values = Matrix::Zero(n, m);
  out.is_case.assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n_cases; ++i) {
    out.is_case[static_cast<std::size_t>(i)] = true;
    const auto& columns =
        out.pattern_columns[rng.index(static_cast<std::size_t>(spec.n_patterns))];
    for (Index c : columns) {
      values(i, c) = 1.0;
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (rng.bernoulli(spec.noise_p)) {
        values(i, j) = 1.0;
      }
    }
  }

  std::vector<std::string> names;
  for (Index j = 0; j < m; ++j) {
    names.push_back("snp" + std::to_string(j + 1));
  }
  out.data = BinaryDataset(std::move(values), std::move(names));
  return out;
}

/// Random near-equal row partition into n_sites parts; remainder rows go one
/// each to the lowest-numbered sites. Row order within a part follows the
/// original dataset.
inline std::vector<LabeledDataset> partition_sites(const LabeledDataset& data,
                                                   Index n_sites,
                                                   std::uint64_t seed) {
  const Index n = data.data.rows();
  require(n_sites >= 1, "need at least one site");
  require(n_sites <= n, "more sites than rows");
  Rng rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  rng.shuffle(idx);

  std::vector<LabeledDataset> parts;
  const Index base = n / n_sites;
  const Index remainder = n % n_sites;
  std::size_t offset = 0;
  for (Index s = 0; s < n_sites; ++s) {
    const Index size = base + (s < remainder ? 1 : 0);
    std::vector<Index> rows(idx.begin() + offset, idx.begin() + offset + size);
    std::sort(rows.begin(), rows.end());
    offset += static_cast<std::size_t>(size);
    LabeledDataset part;
    part.data = data.data.select_rows(rows);
    part.pattern_columns = data.pattern_columns;
    for (Index r : rows) {
      part.is_case.push_back(data.is_case[static_cast<std::size_t>(r)]);
    }
    parts.push_back(std::move(part));
  }
  return parts;
}

}  // namespace fedbm::experiment
