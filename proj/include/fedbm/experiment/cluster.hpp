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
#include <limits>
#include <numeric>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/numeric.hpp"

namespace fedbm::experiment {

/// Agglomerative clustering of the rows (Manhattan distance, average
/// linkage) returning the dendrogram leaf order. Ties break deterministically:
/// merges prefer the pair with the lexicographically smallest (min row index)
/// pair, and each node lists its smaller subtree first (then by lowest row
/// index), so equal inputs always yield the same permutation.
inline std::vector<Index> hierarchical_order(const BinaryDataset& data) {
  const Index n = data.rows();
  require(n >= 1, "clustering needs at least one row");
  if (n == 1) {
    return {0};
  }

  struct Node {
    Index size = 1;
    Index min_row = 0;
    Index left = -1;   // node indices; -1 for leaves
    Index right = -1;
  };

  std::vector<Node> nodes(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)].min_row = i;
  }

  // Active cluster -> node index, plus a dense distance matrix updated with
  // the Lance-Williams rule for average linkage.
  std::vector<Index> active(static_cast<std::size_t>(n));
  std::iota(active.begin(), active.end(), Index{0});
  Matrix dist(n, n);
  for (Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double d =
          (data.values.row(i) - data.values.row(j)).cwiseAbs().sum();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  std::vector<Index> slot_node(active.begin(), active.end());

  std::vector<Index> alive(static_cast<std::size_t>(n));
  std::iota(alive.begin(), alive.end(), Index{0});

  while (alive.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    std::size_t best_b = 1;
    for (std::size_t a = 0; a < alive.size(); ++a) {
      for (std::size_t b = a + 1; b < alive.size(); ++b) {
        const Index sa = alive[a];
        const Index sb = alive[b];
        const double d = dist(sa, sb);
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
          continue;
        }
        if (d == best) {
          const Index cur_lo = std::min(nodes[slot_node[alive[best_a]]].min_row,
                                        nodes[slot_node[alive[best_b]]].min_row);
          const Index cur_hi = std::max(nodes[slot_node[alive[best_a]]].min_row,
                                        nodes[slot_node[alive[best_b]]].min_row);
          const Index new_lo = std::min(nodes[slot_node[sa]].min_row,
                                        nodes[slot_node[sb]].min_row);
          const Index new_hi = std::max(nodes[slot_node[sa]].min_row,
                                        nodes[slot_node[sb]].min_row);
          if (new_lo < cur_lo || (new_lo == cur_lo && new_hi < cur_hi)) {
            best_a = a;
            best_b = b;
          }
        }
      }
    }

    const Index slot_a = alive[best_a];
    const Index slot_b = alive[best_b];
    const Index node_a = slot_node[slot_a];
    const Index node_b = slot_node[slot_b];
    Node merged;
    merged.size = nodes[node_a].size + nodes[node_b].size;
    merged.min_row = std::min(nodes[node_a].min_row, nodes[node_b].min_row);
    merged.left = node_a;
    merged.right = node_b;
    nodes.push_back(merged);
    const Index merged_node = static_cast<Index>(nodes.size()) - 1;

    // Average linkage update into slot_a.
    const double wa = static_cast<double>(nodes[node_a].size);
    const double wb = static_cast<double>(nodes[node_b].size);
    for (Index other : alive) {
      if (other == slot_a || other == slot_b) {
        continue;
      }
      const double d =
          (wa * dist(slot_a, other) + wb * dist(slot_b, other)) / (wa + wb);
      dist(slot_a, other) = d;
      dist(other, slot_a) = d;
    }
    slot_node[slot_a] = merged_node;
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  // Leaf order: smaller subtree first, ties by lowest contained row index.
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<Index> stack{slot_node[alive[0]]};
  while (!stack.empty()) {
    const Index id = stack.back();
    stack.pop_back();
    const Node& node = nodes[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      order.push_back(node.min_row);
      continue;
    }
    Index first = node.left;
    Index second = node.right;
    const Node& l = nodes[static_cast<std::size_t>(first)];
    const Node& r = nodes[static_cast<std::size_t>(second)];
    const bool swap = r.size < l.size ||
                      (r.size == l.size && r.min_row < l.min_row);
    if (swap) {
      std::swap(first, second);
    }
    stack.push_back(second);  // LIFO: `first` is emitted first
    stack.push_back(first);
  }
  return order;
}

}  // namespace fedbm::experiment
