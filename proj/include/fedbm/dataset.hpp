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
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedbm/numeric.hpp"
#include "fedbm/rng.hpp"

namespace fedbm {

/// Rows are individuals, columns are binary variables. Entries are stored as
/// doubles but are always exactly 0.0 or 1.0.
struct BinaryDataset {
  Matrix values;
  std::vector<std::string> column_names;  // empty or one name per column

  BinaryDataset() = default;

  explicit BinaryDataset(Matrix v, std::vector<std::string> names = {})
      : values(std::move(v)), column_names(std::move(names)) {
    validate();
  }

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  void validate() const {
    require(values.cols() >= 1, "dataset must have at least one column");
    for (Index i = 0; i < values.rows(); ++i) {
      for (Index j = 0; j < values.cols(); ++j) {
        const double x = values(i, j);
        require(x == 0.0 || x == 1.0, "dataset entries must be exactly 0 or 1");
      }
    }
    require(column_names.empty() ||
                static_cast<Index>(column_names.size()) == values.cols(),
            "column name count does not match column count");
  }

  BinaryDataset select_rows(const std::vector<Index>& idx) const {
    Matrix out(static_cast<Index>(idx.size()), values.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.row(static_cast<Index>(k)) = values.row(idx[k]);
    }
    return BinaryDataset(std::move(out), column_names);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    fields.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') {
    fields.push_back("");
  }
  return fields;
}

inline bool is_binary_token(const std::string& t) {
  return t == "0" || t == "1";
}

}  // namespace detail

/// Parses the dataset CSV format: an optional header line followed by
/// comma-separated 0/1 values. Any other token is rejected.
inline BinaryDataset load_dataset_csv(std::istream& in,
                                      const std::string& source = "<stream>") {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  Index ncols = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    const bool all_binary = std::all_of(fields.begin(), fields.end(),
                                        detail::is_binary_token);
    if (!all_binary) {
      if (lineno == 1) {
        names = fields;  // header
        ncols = static_cast<Index>(fields.size());
        continue;
      }
      throw std::invalid_argument(source + ":" + std::to_string(lineno) +
                                  ": token is not 0 or 1");
    }
    if (ncols < 0) {
      ncols = static_cast<Index>(fields.size());
    } else if (static_cast<Index>(fields.size()) != ncols) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) +
                                  ": inconsistent column count");
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = fields[j] == "1" ? 1.0 : 0.0;
    }
    rows.push_back(std::move(row));
  }
  if (ncols <= 0) {
    throw std::invalid_argument(source + ": empty dataset");
  }
  Matrix m(static_cast<Index>(rows.size()), ncols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < ncols; ++j) {
      m(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return BinaryDataset(std::move(m), std::move(names));
}

inline BinaryDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file: " + path);
  }
  return load_dataset_csv(in, path);
}

inline void save_dataset_csv(const BinaryDataset& data, std::ostream& out) {
  if (!data.column_names.empty()) {
    for (std::size_t j = 0; j < data.column_names.size(); ++j) {
      out << (j ? "," : "") << data.column_names[j];
    }
    out << "\n";
  }
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      out << (j ? "," : "") << (data.values(i, j) == 1.0 ? 1 : 0);
    }
    out << "\n";
  }
}

inline void save_dataset_csv(const BinaryDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write dataset file: " + path);
  }
  save_dataset_csv(data, out);
}

/// Random row partition. The second part receives round(ratio * n) rows (the
/// held-out share); row order in the parts follows the original dataset.
inline std::pair<BinaryDataset, BinaryDataset> splitdata(
    const BinaryDataset& data, double ratio, Rng& rng) {
  require(ratio > 0.0 && ratio < 1.0, "split ratio must lie in (0,1)");
  const Index n = data.rows();
  require(n >= 2, "splitdata needs at least 2 rows");
  const Index held_out = static_cast<Index>(
      std::llround(ratio * static_cast<double>(n)));
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  rng.shuffle(idx);
  std::vector<Index> second(idx.begin(), idx.begin() + held_out);
  std::vector<Index> first(idx.begin() + held_out, idx.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {data.select_rows(first), data.select_rows(second)};
}

}  // namespace fedbm
