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
#include <stdexcept>
#include <string>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/dbm.hpp"
#include "fedbm/numeric.hpp"
#include "fedbm/rbm.hpp"

namespace fedbm {

/// Thrown when a model exceeds the enumeration cap for the exact routines.
class ModelTooLargeError : public std::runtime_error {
 public:
  explicit ModelTooLargeError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Largest total unit count the exact routines accept by default.
inline constexpr Index kExactNodeCap = 25;

namespace detail {

inline void check_node_cap(Index total, Index cap) {
  if (total > cap) {
    throw ModelTooLargeError(
        "model with " + std::to_string(total) +
        " units exceeds the exact enumeration cap of " + std::to_string(cap));
  }
}

inline void decode_bits(std::uint64_t code, Vector& out) {
  for (Index j = 0; j < out.size(); ++j) {
    out(j) = static_cast<double>((code >> j) & 1u);
  }
}

}  // namespace detail

/// log Z of an RBM, enumerating the visible states and summing the hidden
/// units analytically, which halves the exponent of the enumeration.
inline double exact_logpartition(const Rbm& m, Index node_cap = kExactNodeCap) {
  detail::check_node_cap(m.n_visible() + m.n_hidden(), node_cap);
  LogSumExpAccumulator acc;
  Vector v(m.n_visible());
  const std::uint64_t nstates = std::uint64_t{1} << m.n_visible();
  for (std::uint64_t code = 0; code < nstates; ++code) {
    detail::decode_bits(code, v);
    acc.add(log_unnormalized_pv(m, v));
  }
  return acc.value();
}

namespace detail {

// Enumerates the odd unit layers of a DBM jointly; the even layers (visible
// included) are conditionally independent given the odd ones and marginalize
// to a product of (1 + e^{potential}) factors. `fixed_visible` switches to
// the conditional sum over hidden configurations for a given data row.
inline double dbm_logsum(const Dbm& m, const Vector* fixed_visible) {
  const std::size_t nl = m.n_unit_layers();
  std::vector<std::size_t> odd_layers;
  Index odd_bits = 0;
  for (std::size_t l = 1; l < nl; l += 2) {
    odd_layers.push_back(l);
    odd_bits += m.unit_bias(l).size();
  }
  std::vector<Vector> state(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    state[l] = Vector::Zero(m.unit_bias(l).size());
  }
  if (fixed_visible != nullptr) {
    require(fixed_visible->size() == m.n_visible(),
            "visible vector length mismatch");
    state[0] = *fixed_visible;
  }

  LogSumExpAccumulator acc;
  const std::uint64_t nstates = std::uint64_t{1} << odd_bits;
  for (std::uint64_t code = 0; code < nstates; ++code) {
    std::uint64_t rest = code;
    for (std::size_t l : odd_layers) {
      const Index size = state[l].size();
      detail::decode_bits(rest, state[l]);
      rest >>= size;
    }
    double logterm = 0.0;
    for (std::size_t l : odd_layers) {
      logterm += m.unit_bias(l).dot(state[l]);
    }
    if (fixed_visible != nullptr) {
      // Layers 0 and 1 are both fixed in the conditional sum, so their
      // coupling enters explicitly.
      logterm += m.unit_bias(0).dot(state[0]);
      logterm += state[0].dot(m.layers[0].weights * state[1]);
    }
    for (std::size_t l = 0; l < nl; l += 2) {
      if (l == 0 && fixed_visible != nullptr) {
        continue;
      }
      Vector pot = m.unit_bias(l);
      if (l > 0) {
        pot += m.layers[l - 1].weights.transpose() * state[l - 1];
      }
      if (l < m.layers.size()) {
        pot += m.layers[l].weights * state[l + 1];
      }
      for (Index j = 0; j < pot.size(); ++j) {
        logterm += softplus(pot(j));
      }
    }
    acc.add(logterm);
  }
  return acc.value();
}

}  // namespace detail

/// log Z of a DBM. Enumerates the odd unit layers and marginalizes the even
/// ones analytically.
inline double exact_logpartition(const Dbm& m, Index node_cap = kExactNodeCap) {
  const auto sizes = m.unit_layer_sizes();
  detail::check_node_cap(std::accumulate(sizes.begin(), sizes.end(), Index{0}),
                         node_cap);
  return detail::dbm_logsum(m, nullptr);
}

/// Mean over rows of log p(v) = log sum_h e^{-E(v,h)} - log Z.
inline double exact_loglikelihood(const Rbm& m, const BinaryDataset& data,
                                  Index node_cap = kExactNodeCap) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  require(data.rows() >= 1, "dataset is empty");
  const double logz = exact_logpartition(m, node_cap);
  double s = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    s += log_unnormalized_pv(m, data.values.row(i).transpose());
  }
  return s / static_cast<double>(data.rows()) - logz;
}

inline double exact_loglikelihood(const Dbm& m, const BinaryDataset& data,
                                  Index node_cap = kExactNodeCap) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  require(data.rows() >= 1, "dataset is empty");
  const double logz = exact_logpartition(m, node_cap);
  double s = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    const Vector v = data.values.row(i).transpose();
    s += detail::dbm_logsum(m, &v);
  }
  return s / static_cast<double>(data.rows()) - logz;
}

}  // namespace fedbm
