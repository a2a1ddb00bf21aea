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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedbm/ais.hpp"
#include "fedbm/exact.hpp"
#include "fedbm/train.hpp"
#include "oracle.hpp"

using namespace fedbm;
using Catch::Matchers::WithinAbs;

TEST_CASE("AIS on the base model is exact with zero variance") {
  Rng rng(1);
  Rbm zero = Rbm::zeros(6, 4);
  AisResult r = ais_logpartition(zero, AisConfig(50, 20), rng);
  REQUIRE_THAT(r.estimate, WithinAbs(10.0 * std::log(2.0), 1e-12));
  REQUIRE(r.logweights.isZero());

  Dbm zerod({Rbm::zeros(4, 3), Rbm::zeros(3, 2)});
  AisResult rd = ais_logpartition(zerod, AisConfig(50, 20), rng);
  REQUIRE_THAT(rd.estimate, WithinAbs(9.0 * std::log(2.0), 1e-12));
  REQUIRE(rd.logweights.isZero());
}

TEST_CASE("AIS tracks the exact log partition of small RBMs") {
  Rng rng(7);
  Rbm m = oracle::random_rbm(6, 4, 0.5, rng);
  const double exact = exact_logpartition(m);
  const double est = ais_logpartition(m, AisConfig(100, 100), rng).estimate;
  REQUIRE_THAT(est, WithinAbs(exact, 0.5));
}

TEST_CASE("AIS tracks the exact log partition of small DBMs") {
  Rng rng(9);
  Dbm m = oracle::random_dbm({4, 3, 2}, 0.5, rng);
  const double exact = exact_logpartition(m);
  const double est = ais_logpartition(m, AisConfig(100, 100), rng).estimate;
  REQUIRE_THAT(est, WithinAbs(exact, 0.5));
}

TEST_CASE("doubling the particle count stays within the repeat spread") {
  Rng rng(13);
  Rbm m = oracle::random_rbm(6, 4, 0.5, rng);
  std::vector<double> estimates;
  for (int rep = 0; rep < 10; ++rep) {
    estimates.push_back(ais_logpartition(m, AisConfig(50, 100), rng).estimate);
  }
  const auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end());
  const double spread = *hi - *lo;
  const double doubled = ais_logpartition(m, AisConfig(50, 200), rng).estimate;
  const double mean =
      std::accumulate(estimates.begin(), estimates.end(), 0.0) / 10.0;
  REQUIRE(std::abs(doubled - mean) <= spread);
}

TEST_CASE("AIS log-likelihood of the zero DBM is -n_v ln 2") {
  Rng rng(4);
  Dbm zero({Rbm::zeros(5, 3), Rbm::zeros(3, 2)});
  BinaryDataset data(rng.sample_bernoulli(Matrix::Constant(4, 5, 0.5)));
  const double ll = ais_loglikelihood(zero, data, AisConfig(30, 20), rng);
  REQUIRE_THAT(ll, WithinAbs(-5.0 * std::log(2.0), 1e-6));
}

TEST_CASE("per-sample AIS log-likelihood tracks enumeration on a tiny DBM") {
  Rng rng(21);
  Dbm m = oracle::random_dbm({4, 3, 2}, 0.5, rng);
  BinaryDataset data(rng.sample_bernoulli(Matrix::Constant(5, 4, 0.5)));
  const double exact = exact_loglikelihood(m, data);
  const double est = ais_loglikelihood(m, data, AisConfig(100, 100), rng);
  REQUIRE_THAT(est, WithinAbs(exact, 0.5));
}

TEST_CASE("AIS RBM log-likelihood tracks enumeration") {
  Rng rng(22);
  Rbm m = oracle::random_rbm(6, 4, 0.5, rng);
  BinaryDataset data(rng.sample_bernoulli(Matrix::Constant(5, 6, 0.5)));
  const double exact = exact_loglikelihood(m, data);
  const double est = ais_loglikelihood(m, data, AisConfig(100, 100), rng);
  REQUIRE_THAT(est, WithinAbs(exact, 0.5));
}

TEST_CASE("the lower bound of the zero DBM is tight") {
  Rng rng(5);
  Dbm zero({Rbm::zeros(5, 4), Rbm::zeros(4, 3)});
  BinaryDataset data(rng.sample_bernoulli(Matrix::Constant(6, 5, 0.5)));
  const double bound = logproblowerbound(zero, data, AisConfig(30, 20), rng);
  REQUIRE_THAT(bound, WithinAbs(-5.0 * std::log(2.0), 1e-9));
}

TEST_CASE("the mean-field bound with exact log Z never exceeds the likelihood") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Dbm m = oracle::random_dbm({4, 3, 2}, 0.5, rng);
    BinaryDataset data(rng.sample_bernoulli(Matrix::Constant(10, 4, 0.5)));
    const double logz = exact_logpartition(m);
    const Vector terms = meanfield_bound_terms(m, data.values);
    for (Index i = 0; i < data.rows(); ++i) {
      const double bound_i = terms(i) - logz;
      const double ll_i =
          oracle::dbm_log_pv(m, data.values.row(i).transpose());
      REQUIRE(bound_i <= ll_i + 1e-10);
    }
  }
}

TEST_CASE("the bound is non-decreasing during fine-tuning, up to noise") {
  Matrix rows(60, 4);
  for (Index i = 0; i < 60; ++i) {
    rows.row(i) << 1, 1, 0, 0;
  }
  BinaryDataset data(rows);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TrainSpec spec = TrainSpec::with_nhiddens({3, 2});
    spec.epochs = 30;
    spec.epochspretraining = 10;
    spec.learningrate = 0.05;
    spec.learningratepretraining = 0.05;
    spec.monitoring_metric = Metric::logproblowerbound;
    spec.monitoring_ais = AisConfig(50, 50);
    spec.seed = seed;
    Rng rng(0);
    auto [dbm, log] = fitdbm(data, spec, {{"D", data}}, rng);
    std::vector<double> series;
    for (const auto& e : log.entries) {
      if (e.metric == Metric::logproblowerbound) {
        series.push_back(e.value);
      }
    }
    REQUIRE(series.size() == 30);
    for (std::size_t i = 1; i < series.size(); ++i) {
      REQUIRE(series[i] >= series[i - 1] - 0.3);  // slack for AIS/SGD noise
    }
  }
}

TEST_CASE("the likelihood drops on data from an untrained pattern") {
  Matrix trained_pattern(40, 4), other_pattern(10, 4);
  for (Index i = 0; i < 40; ++i) {
    trained_pattern.row(i) << 1, 1, 0, 0;
  }
  for (Index i = 0; i < 10; ++i) {
    other_pattern.row(i) << 0, 0, 1, 1;
  }
  TrainSpec spec = TrainSpec::with_nhiddens({3, 2});
  spec.epochs = 60;
  spec.epochspretraining = 20;
  spec.learningrate = 0.05;
  spec.learningratepretraining = 0.05;
  spec.seed = 1;
  Rng rng(0);
  auto [dbm, log] = fitdbm(BinaryDataset(trained_pattern), spec, rng);
  const double ll_trained = ais_loglikelihood(
      dbm, BinaryDataset(trained_pattern.topRows(10)), AisConfig(60, 60), rng);
  const double ll_other = ais_loglikelihood(dbm, BinaryDataset(other_pattern),
                                            AisConfig(60, 60), rng);
  REQUIRE(ll_trained > ll_other + 1.0);
}

TEST_CASE("AIS config validation") {
  Rng rng(1);
  Rbm m = Rbm::zeros(3, 2);
  REQUIRE_THROWS_AS(ais_logpartition(m, AisConfig(1, 10), rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ais_logpartition(m, AisConfig(10, 0), rng),
                    std::invalid_argument);
}
