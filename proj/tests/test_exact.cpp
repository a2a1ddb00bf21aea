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

#include <cmath>

#include "fedbm/exact.hpp"
#include "oracle.hpp"

using namespace fedbm;
using Catch::Matchers::WithinAbs;

TEST_CASE("all-zero models have the uniform log partition") {
  REQUIRE_THAT(exact_logpartition(Rbm::zeros(5, 4)),
               WithinAbs(9.0 * std::log(2.0), 1e-12));
  Dbm zero({Rbm::zeros(4, 3), Rbm::zeros(3, 2)});
  REQUIRE_THAT(exact_logpartition(zero),
               WithinAbs(9.0 * std::log(2.0), 1e-12));
}

TEST_CASE("RBM log partition equals the full joint enumeration") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    Rbm m = oracle::random_rbm(4, 3, 1.0, rng);
    REQUIRE_THAT(exact_logpartition(m), WithinAbs(oracle::rbm_logz(m), 1e-9));
  }
}

TEST_CASE("DBM log partition equals the full joint enumeration") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    Dbm m = oracle::random_dbm({4, 3, 2}, 1.0, rng);
    REQUIRE_THAT(exact_logpartition(m), WithinAbs(oracle::dbm_logz(m), 1e-9));
    Dbm deep = oracle::random_dbm({3, 2, 2, 2}, 0.8, rng);
    REQUIRE_THAT(exact_logpartition(deep), WithinAbs(oracle::dbm_logz(deep), 1e-9));
  }
}

TEST_CASE("all-zero models assign -n_v ln 2 per row") {
  Rng rng(2);
  BinaryDataset data(rng.sample_bernoulli(Matrix::Constant(7, 5, 0.5)));
  REQUIRE_THAT(exact_loglikelihood(Rbm::zeros(5, 3), data),
               WithinAbs(-5.0 * std::log(2.0), 1e-12));
  Dbm zero({Rbm::zeros(5, 3), Rbm::zeros(3, 2)});
  REQUIRE_THAT(exact_loglikelihood(zero, data),
               WithinAbs(-5.0 * std::log(2.0), 1e-12));
}

TEST_CASE("log-likelihood matches enumeration and ignores row order") {
  Rng rng(3);
  Rbm m = oracle::random_rbm(5, 4, 1.0, rng);
  Matrix rows = rng.sample_bernoulli(Matrix::Constant(6, 5, 0.5));
  BinaryDataset data(rows);

  double expected = 0.0;
  for (Index i = 0; i < rows.rows(); ++i) {
    expected += oracle::rbm_log_pv(m, rows.row(i).transpose());
  }
  expected /= static_cast<double>(rows.rows());
  REQUIRE_THAT(exact_loglikelihood(m, data), WithinAbs(expected, 1e-9));

  Matrix reversed = rows.colwise().reverse();
  REQUIRE_THAT(exact_loglikelihood(m, BinaryDataset(reversed)),
               WithinAbs(exact_loglikelihood(m, data), 1e-12));

  Dbm dm = oracle::random_dbm({4, 3, 2}, 1.0, rng);
  Matrix vrows = rng.sample_bernoulli(Matrix::Constant(4, 4, 0.5));
  double dexpected = 0.0;
  for (Index i = 0; i < vrows.rows(); ++i) {
    dexpected += oracle::dbm_log_pv(dm, vrows.row(i).transpose());
  }
  dexpected /= static_cast<double>(vrows.rows());
  REQUIRE_THAT(exact_loglikelihood(dm, BinaryDataset(vrows)),
               WithinAbs(dexpected, 1e-9));
}

TEST_CASE("the enumeration cap rejects oversized models") {
  Rbm big = Rbm::zeros(20, 6);
  REQUIRE_THROWS_AS(exact_logpartition(big), ModelTooLargeError);
  Dbm bigd({Rbm::zeros(15, 8), Rbm::zeros(8, 8)});
  REQUIRE_THROWS_AS(exact_logpartition(bigd), ModelTooLargeError);
  // The cap is configurable.
  REQUIRE_NOTHROW(exact_logpartition(big, 26));
}
