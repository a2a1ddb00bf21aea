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

#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "fedbm/dataset.hpp"
#include "fedbm/dbm.hpp"
#include "fedbm/gibbs.hpp"
#include "fedbm/numeric.hpp"
#include "fedbm/rbm.hpp"
#include "fedbm/rng.hpp"

namespace fedbm {

/// Annealing run configuration. `burnin` is the number of Gibbs transitions
/// per temperature; when unset it defaults to 1 for RBMs and 5 for DBMs.
struct AisConfig {
  int ntemperatures = 100;
  int nparticles = 100;
  std::optional<int> burnin;

  AisConfig() = default;
  AisConfig(int t, int n) : ntemperatures(t), nparticles(n) {}
  AisConfig(int t, int n, int b) : ntemperatures(t), nparticles(n), burnin(b) {}

  void validate() const {
    require(ntemperatures >= 2, "AIS needs at least 2 temperatures");
    require(nparticles >= 1, "AIS needs at least 1 particle");
    require(!burnin || *burnin >= 0, "AIS burnin must be non-negative");
  }

  int burnin_for(const Rbm&) const { return burnin.value_or(1); }
  int burnin_for(const Dbm&) const { return burnin.value_or(5); }
};

struct AisResult {
  double estimate = 0.0;
  Vector logweights;
};

namespace detail {

inline Vector energy_rows(const Rbm& m, const Particles& p) {
  return (-(p.states[0] * m.visbias) - (p.states[1] * m.hidbias) -
          ((p.states[0] * m.weights).cwiseProduct(p.states[1]))
              .rowwise()
              .sum());
}

inline Vector energy_rows(const Dbm& m, const Particles& p) {
  Vector e = Vector::Zero(p.n_particles());
  for (std::size_t l = 0; l < p.states.size(); ++l) {
    e -= p.states[l] * m.unit_bias(l);
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    e -= ((p.states[l] * m.layers[l].weights).cwiseProduct(p.states[l + 1]))
             .rowwise()
             .sum();
  }
  return e;
}

inline Index total_units(const Rbm& m) { return m.n_visible() + m.n_hidden(); }

inline Index total_units(const Dbm& m) {
  const auto sizes = m.unit_layer_sizes();
  return std::accumulate(sizes.begin(), sizes.end(), Index{0});
}

// Shared annealing loop. The base distribution (beta = 0) is the all-zero
// model, uniform over all unit configurations, whose log Z is known exactly;
// intermediate distributions scale the target energy geometrically by beta.
template <typename Model, typename Transition>
AisResult anneal(const Model& model, const AisConfig& cfg,
                 Particles particles, double base_logz,
                 const Transition& transition) {
  const int T = cfg.ntemperatures;
  const int steps = cfg.burnin_for(model);
  Vector logw = Vector::Zero(cfg.nparticles);
  double prev_beta = 0.0;
  for (int k = 1; k < T; ++k) {
    const double beta = static_cast<double>(k) / static_cast<double>(T - 1);
    logw -= (beta - prev_beta) * energy_rows(model, particles);
    for (int s = 0; s < steps; ++s) {
      transition(particles, beta);
    }
    prev_beta = beta;
  }
  AisResult result;
  result.logweights = std::move(logw);
  result.estimate = base_logz + log_sum_exp(result.logweights) -
                    std::log(static_cast<double>(cfg.nparticles));
  return result;
}

}  // namespace detail

/// AIS estimate of log Z: anneals cfg.nparticles chains from the uniform
/// base model to the target through cfg.ntemperatures evenly spaced inverse
/// temperatures. Returns the log-mean-exp of the importance weights plus the
/// exact base log Z; the per-particle log weights are kept for diagnostics.
inline AisResult ais_logpartition(const Rbm& m, const AisConfig& cfg, Rng& rng) {
  cfg.validate();
  const double base_logz =
      static_cast<double>(detail::total_units(m)) * std::log(2.0);
  Particles particles = init_particles(m, cfg.nparticles, rng);
  return detail::anneal(m, cfg, std::move(particles), base_logz,
                        [&](Particles& p, double beta) {
                          gibbs_transition(m, p, rng, beta);
                        });
}

inline AisResult ais_logpartition(const Dbm& m, const AisConfig& cfg, Rng& rng) {
  cfg.validate();
  const double base_logz =
      static_cast<double>(detail::total_units(m)) * std::log(2.0);
  Particles particles = init_particles(m, cfg.nparticles, rng);
  return detail::anneal(m, cfg, std::move(particles), base_logz,
                        [&](Particles& p, double beta) {
                          gibbs_transition(m, p, rng, beta);
                        });
}

/// AIS-based log-likelihood of an RBM: the per-row unnormalized term is
/// analytic, only log Z is estimated.
inline double ais_loglikelihood(const Rbm& m, const BinaryDataset& data,
                                const AisConfig& cfg, Rng& rng) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  require(data.rows() >= 1, "dataset is empty");
  const double logz = ais_logpartition(m, cfg, rng).estimate;
  double s = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    s += log_unnormalized_pv(m, data.values.row(i).transpose());
  }
  return s / static_cast<double>(data.rows()) - logz;
}

namespace detail {

// AIS estimate of log sum_h e^{-E(v,h)} for one data row: the chain anneals
// the hidden layers with the visible layer frozen at v. The base counts only
// hidden units.
inline double ais_conditional_logsum(const Dbm& m, const Vector& v,
                                     const AisConfig& cfg, Rng& rng) {
  const double base_logz =
      static_cast<double>(total_units(m) - m.n_visible()) * std::log(2.0);
  Particles particles = init_particles(m, cfg.nparticles, rng);
  particles.states[0] = v.transpose().replicate(cfg.nparticles, 1);
  AisResult r = anneal(m, cfg, std::move(particles), base_logz,
                       [&](Particles& p, double beta) {
                         gibbs_transition(m, p, rng, beta, nullptr,
                                          /*freeze_visible=*/true);
                       });
  return r.estimate;
}

}  // namespace detail

/// AIS-based log-likelihood of a DBM: one conditional AIS run per data row
/// estimates log sum_h e^{-E(v,h)}; a single shared AIS run estimates log Z.
inline double ais_loglikelihood(const Dbm& m, const BinaryDataset& data,
                                const AisConfig& cfg, Rng& rng) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  require(data.rows() >= 1, "dataset is empty");
  cfg.validate();
  const double logz = ais_logpartition(m, cfg, rng).estimate;
  double s = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    s += detail::ais_conditional_logsum(m, data.values.row(i).transpose(),
                                        cfg, rng);
  }
  return s / static_cast<double>(data.rows()) - logz;
}

/// AIS estimate of the variational lower bound of the mean log-likelihood:
/// mean over rows of [-<E>_q + H(q)] - log Z, with q the mean-field
/// posterior and log Z estimated by a shared AIS run.
inline double logproblowerbound(const Dbm& m, const BinaryDataset& data,
                                const AisConfig& cfg, Rng& rng) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  require(data.rows() >= 1, "dataset is empty");
  cfg.validate();
  const double logz = ais_logpartition(m, cfg, rng).estimate;
  return meanfield_bound_terms(m, data.values).mean() - logz;
}

}  // namespace fedbm
