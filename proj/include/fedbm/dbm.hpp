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

#include <utility>
#include <vector>

#include "fedbm/numeric.hpp"
#include "fedbm/rbm.hpp"

namespace fedbm {

/// Deep Boltzmann machine: an ordered stack of RBMs sharing interface
/// dimensions. Unit layer 0 is the visible layer; unit layer l >= 1 is the
/// hidden side of layers[l-1]. The joint energy is
///
///   E(v,h) = -a'v - sum_l b_l'h_l - v'W_1 h_1 - sum_l h_l'W_{l+1} h_{l+1}
///
/// with a = layers[0].visbias and b_l = layers[l-1].hidbias. The visible
/// biases of layers[1..] are leftovers of greedy pretraining and do not
/// enter the DBM distribution.
struct Dbm {
  std::vector<Rbm> layers;

  Dbm() = default;

  explicit Dbm(std::vector<Rbm> rbms) : layers(std::move(rbms)) { validate(); }

  void validate() const {
    require(layers.size() >= 2, "DBM needs at least two RBM layers");
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
      require(layers[i].n_hidden() == layers[i + 1].n_visible(),
              "consecutive DBM layers have mismatched dimensions");
    }
    for (const Rbm& r : layers) {
      r.validate();
    }
  }

  /// Number of unit layers (visible + hidden).
  std::size_t n_unit_layers() const { return layers.size() + 1; }

  Index n_visible() const { return layers.front().n_visible(); }
  Index n_top() const { return layers.back().n_hidden(); }

  /// Sizes of all unit layers, visible first.
  std::vector<Index> unit_layer_sizes() const {
    std::vector<Index> sizes;
    sizes.push_back(layers.front().n_visible());
    for (const Rbm& r : layers) {
      sizes.push_back(r.n_hidden());
    }
    return sizes;
  }

  /// Bias of unit layer l (0 = visible).
  const Vector& unit_bias(std::size_t l) const {
    return l == 0 ? layers[0].visbias : layers[l - 1].hidbias;
  }
};

/// Joint energy for one configuration; states[l] is the binary state of unit
/// layer l.
inline double energy(const Dbm& m, const std::vector<Vector>& states) {
  require(states.size() == m.n_unit_layers(), "state count mismatch");
  double e = 0.0;
  for (std::size_t l = 0; l < states.size(); ++l) {
    e -= m.unit_bias(l).dot(states[l]);
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    e -= states[l].dot(m.layers[l].weights * states[l + 1]);
  }
  return e;
}

/// Mean-field activations for a batch of visible rows: one matrix per hidden
/// layer satisfying (up to `tolerance`)
///
///   mu_l = sigmoid(mu_{l-1} W_l + mu_{l+1} W_{l+1}' + b_l)
///
/// with mu_0 = v and the top layer omitting the upward term. Initialization
/// is a bottom-up pass with doubled potentials for the non-top layers, which
/// stands in for the missing top-down input.
inline std::vector<Matrix> meanfield(const Dbm& m, const Matrix& v,
                                     double tolerance = 1e-5,
                                     int max_iterations = 50) {
  require(v.cols() == m.n_visible(), "visible batch width mismatch");
  const std::size_t nl = m.layers.size();
  std::vector<Matrix> mu(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    const Matrix& below = l == 0 ? v : mu[l - 1];
    const double factor = l + 1 < nl ? 2.0 : 1.0;
    mu[l] = hidden_probability(m.layers[l], below, factor);
  }
  for (int iter = 0; iter < max_iterations; ++iter) {
    double max_change = 0.0;
    for (std::size_t l = 0; l < nl; ++l) {
      const Matrix& below = l == 0 ? v : mu[l - 1];
      Matrix pot = hidden_potential(m.layers[l], below);
      if (l + 1 < nl) {
        pot += mu[l + 1] * m.layers[l + 1].weights.transpose();
      }
      Matrix next = sigmoid(std::move(pot));
      max_change = std::max(max_change, (next - mu[l]).cwiseAbs().maxCoeff());
      mu[l] = std::move(next);
    }
    if (max_change < tolerance) {
      break;
    }
  }
  return mu;
}

/// Per-row value of -<E>_q + H(q) for the factorized mean-field posterior q.
/// Subtracting a log partition value turns this into the variational lower
/// bound of log p(v).
inline Vector meanfield_bound_terms(const Dbm& m, const Matrix& v,
                                    double tolerance = 1e-5,
                                    int max_iterations = 50) {
  const std::vector<Matrix> mu = meanfield(m, v, tolerance, max_iterations);
  const Index n = v.rows();
  Vector terms = Vector::Zero(n);
  // -<E>: bias terms ...
  terms += v * m.layers[0].visbias;
  for (std::size_t l = 0; l < mu.size(); ++l) {
    terms += mu[l] * m.unit_bias(l + 1);
  }
  // ... and coupling terms, factorized over the mean-field marginals.
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const Matrix& below = l == 0 ? v : mu[l - 1];
    terms += ((below * m.layers[l].weights).cwiseProduct(mu[l]))
                 .rowwise()
                 .sum();
  }
  // Entropy of q.
  for (const Matrix& layer : mu) {
    for (Index i = 0; i < layer.rows(); ++i) {
      double h = 0.0;
      for (Index j = 0; j < layer.cols(); ++j) {
        h += bernoulli_entropy(layer(i, j));
      }
      terms(i) += h;
    }
  }
  return terms;
}

}  // namespace fedbm
