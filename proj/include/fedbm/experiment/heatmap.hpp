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

#include <fstream>
#include <string>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/numeric.hpp"

namespace fedbm::experiment {

/// Writes a binary PPM (P6) with one pixel per cell, rows permuted by
/// `row_order`; ones are dark, zeros light. A sidecar text file
/// `<path>.order.txt` records the row ordering.
inline void render_heatmap(const BinaryDataset& data,
                           const std::vector<Index>& row_order,
                           const std::string& path) {
  const Index n = data.rows();
  require(static_cast<Index>(row_order.size()) == n,
          "row order length does not match the data");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index r : row_order) {
    require(r >= 0 && r < n, "row order index out of range");
    require(!seen[static_cast<std::size_t>(r)], "row order repeats an index");
    seen[static_cast<std::size_t>(r)] = true;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write heatmap: " + path);
  }
  out << "P6\n" << data.cols() << " " << n << "\n255\n";
  const unsigned char dark[3] = {32, 32, 32};
  const unsigned char light[3] = {245, 245, 245};
  for (Index i = 0; i < n; ++i) {
    const Index row = row_order[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.cols(); ++j) {
      const unsigned char* px = data.values(row, j) == 1.0 ? dark : light;
      out.write(reinterpret_cast<const char*>(px), 3);
    }
  }
  if (!out) {
    throw std::runtime_error("failed writing heatmap: " + path);
  }

  std::ofstream sidecar(path + ".order.txt");
  if (!sidecar) {
    throw std::runtime_error("cannot write row order sidecar for " + path);
  }
  for (Index r : row_order) {
    sidecar << r << "\n";
  }
}

}  // namespace fedbm::experiment
