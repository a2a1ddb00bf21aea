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
#include <sstream>

#include "fedbm/dataset.hpp"
#include "fedbm/rbm.hpp"
#include "fedbm/rng.hpp"
#include "oracle.hpp"

using namespace fedbm;
using Catch::Matchers::WithinAbs;

TEST_CASE("rng streams are reproducible and seed-dependent") {
  Rng a(1), b(1), c(2);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
  bool differ = false;
  Rng a2(1);
  for (int i = 0; i < 100; ++i) {
    differ |= a2.next_u64() != c.next_u64();
  }
  REQUIRE(differ);

  Rng d(7);
  d.uniform();
  d.seed(7);
  Rng e(7);
  REQUIRE(d.uniform() == e.uniform());
}

TEST_CASE("bernoulli sampling honors the edge probabilities") {
  Rng rng(3);
  Matrix zeros = Matrix::Zero(10, 10);
  REQUIRE(rng.sample_bernoulli(zeros).isZero());
  Matrix ones = Matrix::Ones(10, 10);
  REQUIRE(rng.sample_bernoulli(ones).isOnes());
  REQUIRE_THROWS_AS(rng.bernoulli(1.5), std::invalid_argument);
  REQUIRE_THROWS_AS(rng.bernoulli(-0.1), std::invalid_argument);
}

TEST_CASE("bernoulli sampling matches its mean at p = 0.1") {
  Rng rng(11);
  const int n = 100000;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    count += rng.bernoulli(0.1) ? 1 : 0;
  }
  REQUIRE_THAT(static_cast<double>(count) / n, WithinAbs(0.1, 0.01));
}

TEST_CASE("dataset CSV parses optional headers and rejects bad tokens") {
  std::istringstream with_header("a,b,c\n0,1,0\n1,1,1\n");
  BinaryDataset d1 = load_dataset_csv(with_header);
  REQUIRE(d1.rows() == 2);
  REQUIRE(d1.cols() == 3);
  REQUIRE(d1.column_names == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(d1.values(1, 2) == 1.0);

  std::istringstream plain("0,1\n1,0\n");
  BinaryDataset d2 = load_dataset_csv(plain);
  REQUIRE(d2.rows() == 2);
  REQUIRE(d2.column_names.empty());

  std::istringstream bad("0,1\n0,2\n");
  REQUIRE_THROWS_AS(load_dataset_csv(bad), std::invalid_argument);
  std::istringstream badtok("0,1\n0,x\n");
  REQUIRE_THROWS_AS(load_dataset_csv(badtok), std::invalid_argument);
  std::istringstream ragged("0,1\n0\n");
  REQUIRE_THROWS_AS(load_dataset_csv(ragged), std::invalid_argument);
  std::istringstream empty("");
  REQUIRE_THROWS_AS(load_dataset_csv(empty), std::invalid_argument);
}

TEST_CASE("dataset CSV round-trips") {
  Rng rng(5);
  Matrix m = rng.sample_bernoulli(Matrix::Constant(20, 7, 0.4));
  BinaryDataset d(m, {"c1", "c2", "c3", "c4", "c5", "c6", "c7"});
  std::ostringstream out;
  save_dataset_csv(d, out);
  std::istringstream in(out.str());
  BinaryDataset back = load_dataset_csv(in);
  REQUIRE(back.values == d.values);
  REQUIRE(back.column_names == d.column_names);
}

TEST_CASE("dataset entries must be binary") {
  Matrix m(1, 2);
  m << 0.0, 0.5;
  REQUIRE_THROWS_AS(BinaryDataset(m), std::invalid_argument);
}

TEST_CASE("splitdata partitions rows with the held-out share second") {
  Rng rng(1);
  Matrix m = rng.sample_bernoulli(Matrix::Constant(500, 4, 0.5));
  BinaryDataset data(m);
  Rng split_rng(42);
  auto [train, test] = splitdata(data, 0.2, split_rng);
  REQUIRE(train.rows() == 400);
  REQUIRE(test.rows() == 100);

  // Union of the parts equals the original as a multiset of rows.
  auto row_strings = [](const BinaryDataset& d) {
    std::vector<std::string> rows;
    for (Index i = 0; i < d.rows(); ++i) {
      std::string s;
      for (Index j = 0; j < d.cols(); ++j) {
        s += d.values(i, j) == 1.0 ? '1' : '0';
      }
      rows.push_back(s);
    }
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  auto all = row_strings(data);
  auto a = row_strings(train);
  auto b = row_strings(test);
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  REQUIRE(a == all);

  // Same seed, same split.
  Rng again(42);
  auto [train2, test2] = splitdata(data, 0.2, again);
  REQUIRE(train2.values == train.values);
  REQUIRE(test2.values == test.values);

  REQUIRE_THROWS_AS(splitdata(data, 0.0, split_rng), std::invalid_argument);
  REQUIRE_THROWS_AS(splitdata(data, 1.0, split_rng), std::invalid_argument);
}

TEST_CASE("energy matches the closed form") {
  Rbm zero = Rbm::zeros(3, 2);
  Vector v(3), h(2);
  v << 1, 0, 1;
  h << 1, 1;
  REQUIRE(energy(zero, v, h) == 0.0);

  Rbm single(Matrix::Ones(1, 1), Vector::Zero(1), Vector::Zero(1));
  Vector v1(1), h1(1);
  v1 << 1;
  h1 << 1;
  REQUIRE(energy(single, v1, h1) == -1.0);

  Rng rng(17);
  Rbm m = oracle::random_rbm(3, 2, 1.0, rng);
  REQUIRE_THAT(energy(m, v, h), WithinAbs(oracle::rbm_energy(m, v, h), 1e-12));

  Vector wrong(2);
  wrong << 1, 0;
  REQUIRE_THROWS_AS(energy(m, wrong, h), std::invalid_argument);
}

TEST_CASE("zero-model conditionals are 0.5 and bias-only models decouple") {
  Rbm zero = Rbm::zeros(4, 3);
  Matrix v = Matrix::Ones(2, 4);
  Matrix h = Matrix::Zero(2, 3);
  REQUIRE(hidden_probability(zero, v).isConstant(0.5));
  REQUIRE(visible_probability(zero, h).isConstant(0.5));

  Rbm biased = Rbm::zeros(4, 3);
  biased.hidbias << 1.0, -2.0, 0.3;
  Matrix v2(2, 4);
  v2 << 1, 1, 0, 0, 0, 1, 1, 1;
  const Matrix probs = hidden_probability(biased, v2);
  for (Index i = 0; i < 2; ++i) {
    REQUIRE_THAT(probs(i, 0), WithinAbs(sigmoid(1.0), 1e-15));
    REQUIRE_THAT(probs(i, 1), WithinAbs(sigmoid(-2.0), 1e-15));
    REQUIRE_THAT(probs(i, 2), WithinAbs(sigmoid(0.3), 1e-15));
  }
}

TEST_CASE("conditionals agree with enumerated marginals to 1e-9") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed);
    const Index nv = 2 + static_cast<Index>(rng.index(5));  // <= 6
    const Index nh = 2 + static_cast<Index>(rng.index(4));  // <= 5
    Rbm m = oracle::random_rbm(nv, nh, 1.5, rng);
    const Vector v = rng.sample_bernoulli(Matrix::Constant(1, nv, 0.5))
                         .row(0)
                         .transpose();
    const Vector hp = hidden_probability(m, v);
    for (Index j = 0; j < nh; ++j) {
      REQUIRE_THAT(hp(j), WithinAbs(oracle::rbm_hidden_marginal(m, v, j), 1e-9));
    }
    const Vector h = rng.sample_bernoulli(Matrix::Constant(1, nh, 0.5))
                         .row(0)
                         .transpose();
    const Vector vp = visible_probability(m, h);
    for (Index i = 0; i < nv; ++i) {
      REQUIRE_THAT(vp(i),
                   WithinAbs(oracle::rbm_visible_marginal(m, h, i), 1e-9));
    }
  }
}

TEST_CASE("visible probability is the transpose-swapped hidden probability") {
  Rng rng(23);
  Rbm m = oracle::random_rbm(5, 3, 1.0, rng);
  Rbm swapped(m.weights.transpose(), m.hidbias, m.visbias);
  Matrix x = rng.sample_bernoulli(Matrix::Constant(4, 3, 0.5));
  REQUIRE(visible_probability(m, x) == hidden_probability(swapped, x));
}

TEST_CASE("reconstruction error of the zero model is 0.5 on any data") {
  Rbm zero = Rbm::zeros(2, 3);
  Matrix rows(4, 2);
  rows << 0, 1, 0, 1, 0, 1, 0, 1;
  REQUIRE_THAT(reconstruction_error_matrix(zero, rows), WithinAbs(0.5, 1e-15));
}

TEST_CASE("reconstruction error is invariant under row duplication") {
  Rng rng(31);
  Rbm m = oracle::random_rbm(6, 4, 0.8, rng);
  Matrix rows = rng.sample_bernoulli(Matrix::Constant(5, 6, 0.5));
  Matrix doubled(10, 6);
  doubled << rows, rows;
  REQUIRE_THAT(reconstruction_error_matrix(m, doubled),
               WithinAbs(reconstruction_error_matrix(m, rows), 1e-12));
}
