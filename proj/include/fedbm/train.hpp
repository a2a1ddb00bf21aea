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
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedbm/ais.hpp"
#include "fedbm/dataset.hpp"
#include "fedbm/dbm.hpp"
#include "fedbm/exact.hpp"
#include "fedbm/gibbs.hpp"
#include "fedbm/monitor.hpp"
#include "fedbm/numeric.hpp"
#include "fedbm/rbm.hpp"
#include "fedbm/rng.hpp"

namespace fedbm {

/// Per-layer training parameters. A non-empty `parts` list makes this a
/// partitioned layer: each part trains on a consecutive slice of `n_input`
/// input columns with its own hidden units, and the assembled layer weight
/// matrix is block-diagonal (cross-part entries stay exactly zero, also
/// through DBM fine-tuning).
struct LayerSpec {
  Index n_hidden = 0;
  std::optional<double> learningrate;
  std::optional<int> epochs;
  Index n_input = 0;  // parts only: width of this part's input slice
  std::vector<LayerSpec> parts;

  LayerSpec() = default;
  explicit LayerSpec(Index nh) : n_hidden(nh) {}

  bool partitioned() const { return !parts.empty(); }

  Index total_hidden() const {
    if (!partitioned()) {
      return n_hidden;
    }
    Index sum = 0;
    for (const LayerSpec& p : parts) {
      sum += p.n_hidden;
    }
    return sum;
  }

  void validate() const {
    if (partitioned()) {
      for (const LayerSpec& p : parts) {
        require(!p.partitioned(), "nested layer partitions are not supported");
        require(p.n_hidden >= 1, "partition part needs hidden units");
        require(p.n_input >= 1, "partition part needs an input slice width");
      }
      require(n_hidden == 0 || n_hidden == total_hidden(),
              "partitioned layer width must equal the sum of its parts");
    } else {
      require(n_hidden >= 1, "layer needs at least one hidden unit");
    }
    require(!learningrate || *learningrate > 0.0,
            "layer learning rate must be positive");
    require(!epochs || *epochs >= 1, "layer epochs must be positive");
  }
};

/// All hyperparameters of a training run. `monitoring_datasets` names the
/// session objects to evaluate each epoch; callers resolve the labels and
/// hand the trainers the actual data. When `seed` is set the trainer reseeds
/// the supplied random stream before anything else.
struct TrainSpec {
  std::vector<LayerSpec> layers;
  int epochs = 10;
  double learningrate = 0.005;
  int epochspretraining = 10;
  double learningratepretraining = 0.005;
  int batchsize = 1;
  int cdsteps = 1;
  int n_particles = 0;  // 0: use the default of 100 persistent chains
  std::vector<std::string> monitoring_datasets;
  Metric monitoring_metric = Metric::reconstruction_error;
  AisConfig monitoring_ais;
  std::optional<std::uint64_t> seed;

  static TrainSpec with_nhiddens(const std::vector<Index>& nhiddens) {
    TrainSpec spec;
    for (Index nh : nhiddens) {
      spec.layers.emplace_back(nh);
    }
    return spec;
  }

  void validate() const {
    require(!layers.empty(), "at least one layer is required");
    for (const LayerSpec& l : layers) {
      l.validate();
    }
    require(epochs >= 1 && epochspretraining >= 1, "epoch counts must be >= 1");
    require(learningrate > 0.0 && learningratepretraining > 0.0,
            "learning rates must be positive");
    require(batchsize >= 1, "batch size must be >= 1");
    require(cdsteps >= 1, "cdsteps must be >= 1");
    require(n_particles >= 0, "particle count must be non-negative");
    monitoring_ais.validate();
  }
};

/// Datasets evaluated during monitoring, keyed by their session label.
using MonitoringData = std::vector<std::pair<std::string, BinaryDataset>>;

inline double reconstruction_error(const Rbm& m, const BinaryDataset& data) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  return reconstruction_error_matrix(m, data.values);
}

/// Reconstruction error of a DBM's first layer, the default monitoring
/// proxy during fine-tuning.
inline double reconstruction_error(const Dbm& m, const BinaryDataset& data) {
  require(data.cols() == m.n_visible(), "dataset width mismatch");
  return reconstruction_error_matrix(m.layers[0], data.values);
}

namespace detail {

// Weight init spread 0.1: small-sample layers need the symmetry between
// hidden units broken at initialization, or the few CD updates an epoch
// budget allows never develop couplings.
inline constexpr double kWeightInitSigma = 0.1;

inline Rbm init_rbm(Index n_visible, Index n_hidden, Rng& rng) {
  Matrix w(n_visible, n_hidden);
  for (Index i = 0; i < n_visible; ++i) {
    for (Index j = 0; j < n_hidden; ++j) {
      w(i, j) = rng.normal(0.0, kWeightInitSigma);
    }
  }
  return Rbm(std::move(w), Vector::Zero(n_visible), Vector::Zero(n_hidden));
}

// One epoch of CD-k over shuffled minibatches. `up`/`down` scale the hidden
// and visible potentials (the DBM pretraining correction); the gradient
// itself is the usual difference of data and chain statistics.
inline void cd_epoch(Rbm& m, const Matrix& data, double lr, int batchsize,
                     int cdsteps, double up, double down, Rng& rng) {
  const Index n = data.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  for (Index start = 0; start < n; start += batchsize) {
    const Index m_rows = std::min<Index>(batchsize, n - start);
    Matrix v0(m_rows, data.cols());
    for (Index r = 0; r < m_rows; ++r) {
      v0.row(r) = data.row(order[static_cast<std::size_t>(start + r)]);
    }
    const Matrix h0_prob = hidden_probability(m, v0, up);
    Matrix h_state = rng.sample_bernoulli(h0_prob);
    Matrix v_neg, h_prob;
    for (int step = 0; step < cdsteps; ++step) {
      v_neg = rng.sample_bernoulli(visible_probability(m, h_state, down));
      h_prob = hidden_probability(m, v_neg, up);
      if (step + 1 < cdsteps) {
        h_state = rng.sample_bernoulli(h_prob);
      }
    }
    const double scale = lr / static_cast<double>(m_rows);
    m.weights += scale * (v0.transpose() * h0_prob - v_neg.transpose() * h_prob);
    m.visbias += scale * (v0 - v_neg).colwise().sum().transpose();
    m.hidbias += scale * (h0_prob - h_prob).colwise().sum().transpose();
  }
}

// Per-epoch metric evaluation shared by all trainers. The reconstruction
// error is always recorded; a requested likelihood metric is logged on top
// of it. Stochastic metrics draw from a dedicated evaluation stream so the
// parameter trajectory does not depend on the monitoring configuration.
struct EpochMonitor {
  Metric metric = Metric::reconstruction_error;
  AisConfig ais;
  Rng* eval_rng = nullptr;
  MonitoringLog* log = nullptr;

  void eval_rbm(int epoch, const Rbm& m,
                const std::vector<std::pair<std::string, Matrix>>& sets) const {
    for (const auto& [label, x] : sets) {
      log->append(epoch, Metric::reconstruction_error, label,
                  reconstruction_error_matrix(m, x));
      switch (metric) {
        case Metric::reconstruction_error:
          break;
        case Metric::exact_loglikelihood:
          log->append(epoch, metric, label,
                      exact_loglikelihood(m, BinaryDataset(binarize(x))));
          break;
        case Metric::ais_loglikelihood:
          log->append(epoch, metric, label,
                      ais_loglikelihood(m, BinaryDataset(binarize(x)), ais,
                                        *eval_rng));
          break;
        case Metric::logproblowerbound:
          throw std::invalid_argument(
              "logproblowerbound monitoring requires a DBM");
      }
    }
  }

  void eval_dbm(int epoch, const Dbm& m, const MonitoringData& sets) const {
    std::optional<double> shared_logz;
    for (const auto& [label, ds] : sets) {
      log->append(epoch, Metric::reconstruction_error, label,
                  reconstruction_error(m, ds));
      switch (metric) {
        case Metric::reconstruction_error:
          break;
        case Metric::exact_loglikelihood:
          log->append(epoch, metric, label, exact_loglikelihood(m, ds));
          break;
        case Metric::ais_loglikelihood:
          log->append(epoch, metric, label,
                      ais_loglikelihood(m, ds, ais, *eval_rng));
          break;
        case Metric::logproblowerbound: {
          if (!shared_logz) {
            shared_logz = ais_logpartition(m, ais, *eval_rng).estimate;
          }
          log->append(epoch, metric, label,
                      meanfield_bound_terms(m, ds.values).mean() - *shared_logz);
          break;
        }
      }
    }
  }

 private:
  // Monitoring sets for layers > 1 are propagated probabilities; metrics
  // other than the reconstruction error only apply to binary inputs.
  static Matrix binarize(const Matrix& x) {
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.cols(); ++j) {
        require(x(i, j) == 0.0 || x(i, j) == 1.0,
                "likelihood monitoring is only defined on binary data");
      }
    }
    return x;
  }
};

struct LayerFactors {
  double up = 1.0;
  double down = 1.0;
};

// The doubled-potential correction of greedy DBM pretraining: layers with a
// layer above get doubled bottom-up input, layers with a layer below get
// doubled top-down input, compensating the lateral input they will receive
// in the assembled DBM.
inline LayerFactors pretraining_factors(std::size_t layer, std::size_t n_layers,
                                        bool for_dbm) {
  if (!for_dbm || n_layers == 1) {
    return {1.0, 1.0};
  }
  if (layer == 0) {
    return {2.0, 1.0};
  }
  if (layer + 1 == n_layers) {
    return {1.0, 2.0};
  }
  return {2.0, 2.0};
}

inline Rbm train_layer_rbm(const Matrix& x, Index n_hidden, int epochs,
                           double lr, const TrainSpec& spec, LayerFactors f,
                           const EpochMonitor& monitor,
                           const std::vector<std::pair<std::string, Matrix>>& msets,
                           Rng& rng) {
  Rbm m = init_rbm(x.cols(), n_hidden, rng);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    cd_epoch(m, x, lr, spec.batchsize, spec.cdsteps, f.up, f.down, rng);
    monitor.eval_rbm(epoch, m, msets);
  }
  return m;
}

// Trains one (possibly partitioned) stack layer on representation `x`.
inline Rbm train_stack_layer(const Matrix& x, const LayerSpec& layer,
                             const TrainSpec& spec, LayerFactors f,
                             const EpochMonitor& monitor,
                             const std::vector<std::pair<std::string, Matrix>>& msets,
                             const std::string& label_suffix, Rng& rng) {
  if (!layer.partitioned()) {
    const int epochs = layer.epochs.value_or(spec.epochspretraining);
    const double lr = layer.learningrate.value_or(spec.learningratepretraining);
    std::vector<std::pair<std::string, Matrix>> labeled;
    labeled.reserve(msets.size());
    for (const auto& [label, mx] : msets) {
      labeled.emplace_back(label + label_suffix, mx);
    }
    return train_layer_rbm(x, layer.n_hidden, epochs, lr, spec, f, monitor,
                           labeled, rng);
  }

  Index input_sum = 0;
  for (const LayerSpec& part : layer.parts) {
    input_sum += part.n_input;
  }
  require(input_sum == x.cols(),
          "partition parts do not sum to the layer input width");

  const Index n_hidden = layer.total_hidden();
  Rbm assembled = Rbm::zeros(x.cols(), n_hidden);
  Index in_off = 0;
  Index out_off = 0;
  for (std::size_t p = 0; p < layer.parts.size(); ++p) {
    const LayerSpec& part = layer.parts[p];
    const Matrix slice = x.middleCols(in_off, part.n_input);
    std::vector<std::pair<std::string, Matrix>> part_sets;
    part_sets.reserve(msets.size());
    for (const auto& [label, mx] : msets) {
      part_sets.emplace_back(
          label + label_suffix + ".part" + std::to_string(p + 1),
          Matrix(mx.middleCols(in_off, part.n_input)));
    }
    const int epochs = part.epochs.value_or(
        layer.epochs.value_or(spec.epochspretraining));
    const double lr = part.learningrate.value_or(
        layer.learningrate.value_or(spec.learningratepretraining));
    const Rbm trained = train_layer_rbm(slice, part.n_hidden, epochs, lr, spec,
                                        f, monitor, part_sets, rng);
    assembled.weights.block(in_off, out_off, part.n_input, part.n_hidden) =
        trained.weights;
    assembled.visbias.segment(in_off, part.n_input) = trained.visbias;
    assembled.hidbias.segment(out_off, part.n_hidden) = trained.hidbias;
    in_off += part.n_input;
    out_off += part.n_hidden;
  }
  return assembled;
}

// Block mask with ones inside the part blocks; fine-tuning multiplies the
// gradient with it so partitioned layers keep their structural zeros.
inline Matrix partition_mask(const LayerSpec& layer, Index n_in, Index n_out) {
  Matrix mask = Matrix::Zero(n_in, n_out);
  Index in_off = 0;
  Index out_off = 0;
  for (const LayerSpec& part : layer.parts) {
    mask.block(in_off, out_off, part.n_input, part.n_hidden).setOnes();
    in_off += part.n_input;
    out_off += part.n_hidden;
  }
  return mask;
}

inline std::vector<std::pair<std::string, Matrix>> to_matrices(
    const MonitoringData& monitoring, Index expected_cols) {
  std::vector<std::pair<std::string, Matrix>> sets;
  sets.reserve(monitoring.size());
  for (const auto& [label, ds] : monitoring) {
    require(ds.cols() == expected_cols,
            "monitoring dataset width does not match the training data");
    require(ds.rows() >= 1, "monitoring dataset is empty");
    sets.emplace_back(label, ds.values);
  }
  return sets;
}

inline std::pair<std::vector<Rbm>, MonitoringLog> stackrbms_impl(
    const BinaryDataset& data, const TrainSpec& spec, bool for_dbm,
    const MonitoringData& monitoring, Rng& rng, Rng& eval_rng) {
  require(data.rows() >= 1, "training data is empty");
  spec.validate();
  MonitoringLog log;
  EpochMonitor monitor{spec.monitoring_metric, spec.monitoring_ais, &eval_rng,
                       &log};
  auto msets = to_matrices(monitoring, data.cols());

  std::vector<Rbm> rbms;
  Matrix x = data.values;
  const std::size_t n_layers = spec.layers.size();
  for (std::size_t i = 0; i < n_layers; ++i) {
    const LayerFactors f = pretraining_factors(i, n_layers, for_dbm);
    const std::string suffix = "/layer" + std::to_string(i + 1);
    rbms.push_back(train_stack_layer(x, spec.layers[i], spec, f, monitor,
                                     msets, suffix, rng));
    if (i + 1 < n_layers) {
      x = hidden_probability(rbms.back(), x, f.up);
      for (auto& [label, mx] : msets) {
        mx = hidden_probability(rbms.back(), mx, f.up);
      }
    }
  }
  return {std::move(rbms), std::move(log)};
}

}  // namespace detail

/// Monitored CD-k training of a single RBM. The spec must carry exactly one
/// (non-partitioned) layer; its overrides take precedence over the spec's
/// epochs/learningrate.
inline std::pair<Rbm, MonitoringLog> fitrbm(const BinaryDataset& data,
                                            const TrainSpec& spec,
                                            const MonitoringData& monitoring,
                                            Rng& rng) {
  require(data.rows() >= 1, "training data is empty");
  spec.validate();
  require(spec.layers.size() == 1, "fitrbm expects exactly one layer spec");
  require(!spec.layers[0].partitioned(),
          "fitrbm does not support partitioned layers");
  if (spec.seed) {
    rng.seed(*spec.seed);
  }
  Rng eval_rng(rng.next_u64());
  MonitoringLog log;
  detail::EpochMonitor monitor{spec.monitoring_metric, spec.monitoring_ais,
                               &eval_rng, &log};
  auto msets = detail::to_matrices(monitoring, data.cols());
  const LayerSpec& layer = spec.layers[0];
  const int epochs = layer.epochs.value_or(spec.epochs);
  const double lr = layer.learningrate.value_or(spec.learningrate);
  Rbm m = detail::train_layer_rbm(data.values, layer.n_hidden, epochs, lr,
                                  spec, {1.0, 1.0}, monitor, msets, rng);
  return {std::move(m), std::move(log)};
}

inline std::pair<Rbm, MonitoringLog> fitrbm(const BinaryDataset& data,
                                            const TrainSpec& spec, Rng& rng) {
  return fitrbm(data, spec, {}, rng);
}

/// Greedy layer-wise training of an RBM stack: layer 1 on the data, each
/// further layer on the propagated hidden probabilities. With `for_dbm` the
/// doubled-potential pretraining correction is applied and the result is
/// ready for DBM assembly; without it the stack is a DBN.
inline std::pair<std::vector<Rbm>, MonitoringLog> stackrbms(
    const BinaryDataset& data, const TrainSpec& spec, bool for_dbm,
    const MonitoringData& monitoring, Rng& rng) {
  if (spec.seed) {
    rng.seed(*spec.seed);
  }
  Rng eval_rng(rng.next_u64());
  return detail::stackrbms_impl(data, spec, for_dbm, monitoring, rng, eval_rng);
}

inline std::pair<std::vector<Rbm>, MonitoringLog> stackrbms(
    const BinaryDataset& data, const TrainSpec& spec, bool for_dbm, Rng& rng) {
  return stackrbms(data, spec, for_dbm, {}, rng);
}

inline constexpr int kDefaultFinetuneParticles = 100;

// Gibbs transitions applied to the persistent chains per fine-tuning epoch.
// One transition is not enough for the chains to track the model and the
// learned marginals drift.
inline constexpr int kFinetuneGibbsSteps = 5;

/// Monitored DBM training: greedy layer-wise pretraining, then fine-tuning
/// by stochastic approximation of the variational lower bound gradient.
/// Each fine-tuning epoch takes one gradient step from full-batch mean-field
/// statistics against persistent Gibbs particles, with the step size
/// annealed as learningrate * 11/(10 + epoch); without the annealing the
/// persistent chains cannot follow the model and the marginals drift.
inline std::pair<Dbm, MonitoringLog> fitdbm(const BinaryDataset& data,
                                            const TrainSpec& spec,
                                            const MonitoringData& monitoring,
                                            Rng& rng) {
  require(data.rows() >= 1, "training data is empty");
  spec.validate();
  require(spec.layers.size() >= 2, "fitdbm needs at least two layers");
  if (spec.seed) {
    rng.seed(*spec.seed);
  }
  Rng eval_rng(rng.next_u64());

  // Pretraining is monitored with the reconstruction error regardless of the
  // requested fine-tuning metric; likelihood metrics are not defined on the
  // propagated probability representations of the upper layers.
  TrainSpec pretrain_spec = spec;
  pretrain_spec.monitoring_metric = Metric::reconstruction_error;
  auto [rbms, log] =
      detail::stackrbms_impl(data, pretrain_spec, /*for_dbm=*/true, monitoring,
                             rng, eval_rng);
  Dbm dbm(std::move(rbms));

  detail::EpochMonitor monitor{spec.monitoring_metric, spec.monitoring_ais,
                               &eval_rng, &log};

  std::vector<Matrix> masks(spec.layers.size());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (spec.layers[l].partitioned()) {
      masks[l] = detail::partition_mask(spec.layers[l],
                                        dbm.layers[l].n_visible(),
                                        dbm.layers[l].n_hidden());
    }
  }

  const Index n_particles =
      spec.n_particles > 0 ? spec.n_particles : kDefaultFinetuneParticles;
  Particles particles = init_particles(dbm, n_particles, rng);
  const double np = static_cast<double>(n_particles);
  const Matrix& v = data.values;
  const double rows = static_cast<double>(data.rows());

  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    const double lr =
        spec.learningrate * 11.0 / (10.0 + static_cast<double>(epoch));
    const std::vector<Matrix> mu = meanfield(dbm, v);
    for (int s = 0; s < kFinetuneGibbsSteps; ++s) {
      gibbs_transition(dbm, particles, rng);
    }

    for (std::size_t l = 0; l < dbm.layers.size(); ++l) {
      const Matrix& below = l == 0 ? v : mu[l - 1];
      Matrix grad = below.transpose() * mu[l] / rows -
                    particles.states[l].transpose() * particles.states[l + 1] / np;
      if (masks[l].size() > 0) {
        grad = grad.cwiseProduct(masks[l]);
      }
      dbm.layers[l].weights += lr * grad;
    }
    dbm.layers[0].visbias +=
        lr * (v.colwise().mean() - particles.states[0].colwise().mean())
                 .transpose();
    for (std::size_t l = 0; l < dbm.layers.size(); ++l) {
      dbm.layers[l].hidbias +=
          lr *
          (mu[l].colwise().mean() - particles.states[l + 1].colwise().mean())
              .transpose();
    }
    monitor.eval_dbm(epoch, dbm, monitoring);
  }
  return {std::move(dbm), std::move(log)};
}

inline std::pair<Dbm, MonitoringLog> fitdbm(const BinaryDataset& data,
                                            const TrainSpec& spec, Rng& rng) {
  return fitdbm(data, spec, {}, rng);
}

}  // namespace fedbm
