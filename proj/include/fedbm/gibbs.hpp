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
#include <optional>
#include <set>
#include <type_traits>
#include <utility>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/dbm.hpp"
#include "fedbm/numeric.hpp"
#include "fedbm/rbm.hpp"
#include "fedbm/rng.hpp"

namespace fedbm {

/// State of a set of parallel Gibbs chains: one binary matrix per unit layer
/// (visible first), with one row per particle.
struct Particles {
  std::vector<Matrix> states;

  Index n_particles() const {
    return states.empty() ? 0 : states.front().rows();
  }
};

/// Visible units held fixed during conditional sampling.
struct Clamp {
  std::vector<Index> indices;
  Vector values;

  void validate(Index n_visible) const {
    require(static_cast<Index>(indices.size()) == values.size(),
            "clamp indices and values differ in length");
    std::set<Index> seen;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      require(indices[k] >= 0 && indices[k] < n_visible,
              "clamp index out of range");
      require(seen.insert(indices[k]).second, "duplicate clamp index");
      require(values(static_cast<Index>(k)) == 0.0 ||
                  values(static_cast<Index>(k)) == 1.0,
              "clamp values must be binary");
    }
  }

  void apply(Matrix& visible) const {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      visible.col(indices[k]).setConstant(values(static_cast<Index>(k)));
    }
  }
};

inline Particles init_particles(const Rbm& m, Index n, Rng& rng) {
  require(n >= 1, "particle count must be positive");
  Particles p;
  p.states.push_back(rng.sample_bernoulli(Matrix::Constant(n, m.n_visible(), 0.5)));
  p.states.push_back(rng.sample_bernoulli(Matrix::Constant(n, m.n_hidden(), 0.5)));
  return p;
}

inline Particles init_particles(const Dbm& m, Index n, Rng& rng) {
  require(n >= 1, "particle count must be positive");
  Particles p;
  for (Index size : m.unit_layer_sizes()) {
    p.states.push_back(rng.sample_bernoulli(Matrix::Constant(n, size, 0.5)));
  }
  return p;
}

/// One Gibbs transition of an RBM chain: resample h given v, then v given h.
/// `beta` scales all potentials (the inverse temperature used by AIS).
inline void gibbs_transition(const Rbm& m, Particles& p, Rng& rng,
                             double beta = 1.0,
                             const Clamp* clamp = nullptr) {
  require(p.states.size() == 2, "RBM particles need two unit layers");
  require(p.states[0].cols() == m.n_visible() &&
              p.states[1].cols() == m.n_hidden(),
          "particle dimensions do not match the model");
  p.states[1] = rng.sample_bernoulli(
      sigmoid(beta * hidden_potential(m, p.states[0])));
  p.states[0] = rng.sample_bernoulli(
      sigmoid(beta * visible_potential(m, p.states[1])));
  if (clamp != nullptr) {
    clamp->apply(p.states[0]);
  }
}

namespace detail {

inline Matrix dbm_layer_potential(const Dbm& m, const Particles& p,
                                  std::size_t l) {
  const std::size_t top = m.layers.size();
  Matrix pot = Matrix::Zero(p.n_particles(), m.unit_bias(l).size());
  if (l > 0) {
    pot += p.states[l - 1] * m.layers[l - 1].weights;
  }
  if (l < top) {
    pot += p.states[l + 1] * m.layers[l].weights.transpose();
  }
  pot.rowwise() += m.unit_bias(l).transpose();
  return pot;
}

}  // namespace detail

/// One Gibbs transition of a DBM chain: even-indexed unit layers are
/// conditionally independent given the odd-indexed ones and vice versa, so
/// the update resamples all even layers, then all odd layers. With
/// `freeze_visible` the visible layer is skipped entirely (used for the
/// per-sample AIS runs that condition on a data row).
inline void gibbs_transition(const Dbm& m, Particles& p, Rng& rng,
                             double beta = 1.0, const Clamp* clamp = nullptr,
                             bool freeze_visible = false) {
  const std::size_t nl = m.n_unit_layers();
  require(p.states.size() == nl, "particle layer count mismatch");
  for (std::size_t l = 0; l < nl; ++l) {
    require(p.states[l].cols() == m.unit_bias(l).size(),
            "particle dimensions do not match the model");
  }
  for (std::size_t phase = 0; phase < 2; ++phase) {
    for (std::size_t l = phase; l < nl; l += 2) {
      if (l == 0 && freeze_visible) {
        continue;
      }
      p.states[l] = rng.sample_bernoulli(
          sigmoid(beta * detail::dbm_layer_potential(m, p, l)));
      if (l == 0 && clamp != nullptr) {
        clamp->apply(p.states[0]);
      }
    }
  }
}

namespace detail {

template <typename Model>
inline BinaryDataset samples_impl(const Model& model, Index n, int burnin,
                                  const std::optional<Clamp>& clamp, Rng& rng,
                                  Index n_visible) {
  require(n >= 1, "sample count must be positive");
  require(burnin >= 0, "burnin must be non-negative");
  const Clamp* cl = clamp ? &*clamp : nullptr;
  if (cl != nullptr) {
    cl->validate(n_visible);
  }
  Particles p = init_particles(model, n, rng);
  if (cl != nullptr) {
    cl->apply(p.states[0]);
  }
  for (int t = 0; t < burnin; ++t) {
    gibbs_transition(model, p, rng, 1.0, cl);
  }
  // Final visible state: a fresh Bernoulli draw of the visible probabilities
  // given the current first hidden layer.
  Matrix probs;
  if constexpr (std::is_same_v<Model, Rbm>) {
    probs = visible_probability(model, p.states[1]);
  } else {
    probs = visible_probability(model.layers[0], p.states[1]);
  }
  Matrix v = rng.sample_bernoulli(probs);
  if (cl != nullptr) {
    cl->apply(v);
  }
  return BinaryDataset(std::move(v));
}

}  // namespace detail

/// Default burn-in lengths for sample generation.
inline constexpr int kDefaultBurninRbm = 100;
inline constexpr int kDefaultBurninDbm = 200;

/// Draws n rows from the model: n independent Gibbs chains from random
/// initialization, `burnin` transitions each, clamped visible indices held
/// at their given values throughout.
inline BinaryDataset samples(const Rbm& m, Index n, int burnin,
                             const std::optional<Clamp>& clamp, Rng& rng) {
  return detail::samples_impl(m, n, burnin, clamp, rng, m.n_visible());
}

inline BinaryDataset samples(const Dbm& m, Index n, int burnin,
                             const std::optional<Clamp>& clamp, Rng& rng) {
  return detail::samples_impl(m, n, burnin, clamp, rng, m.n_visible());
}

inline BinaryDataset samples(const Rbm& m, Index n, Rng& rng) {
  return samples(m, n, kDefaultBurninRbm, std::nullopt, rng);
}

inline BinaryDataset samples(const Dbm& m, Index n, Rng& rng) {
  return samples(m, n, kDefaultBurninDbm, std::nullopt, rng);
}

}  // namespace fedbm
