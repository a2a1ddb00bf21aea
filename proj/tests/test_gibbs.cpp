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

#include "fedbm/gibbs.hpp"
#include "oracle.hpp"

using namespace fedbm;
using Catch::Matchers::WithinAbs;

TEST_CASE("zero model samples are fair coins") {
  Rng rng(1);
  Rbm zero = Rbm::zeros(5, 3);
  BinaryDataset s = samples(zero, 2000, rng);
  REQUIRE(s.rows() == 2000);
  REQUIRE(s.cols() == 5);
  for (Index j = 0; j < 5; ++j) {
    REQUIRE_THAT(s.values.col(j).mean(), WithinAbs(0.5, 0.03));
  }
}

TEST_CASE("gibbs transitions preserve particle shapes") {
  Rng rng(2);
  Rbm m = oracle::random_rbm(4, 3, 0.5, rng);
  Particles p = init_particles(m, 7, rng);
  gibbs_transition(m, p, rng);
  REQUIRE(p.n_particles() == 7);
  REQUIRE(p.states[0].cols() == 4);
  REQUIRE(p.states[1].cols() == 3);

  Dbm dbm = oracle::random_dbm({3, 3, 2}, 0.5, rng);
  Particles q = init_particles(dbm, 5, rng);
  gibbs_transition(dbm, q, rng);
  REQUIRE(q.states.size() == 3);
  REQUIRE(q.n_particles() == 5);
}

TEST_CASE("clamped columns hold their values in every sample") {
  Rng rng(3);
  Rbm m = oracle::random_rbm(6, 4, 0.7, rng);
  Clamp clamp;
  clamp.indices = {1, 4};
  clamp.values = Vector(2);
  clamp.values << 1.0, 0.0;
  BinaryDataset s = samples(m, 1000, 30, clamp, rng);
  REQUIRE(s.values.col(1).isOnes());
  REQUIRE(s.values.col(4).isZero());

  Dbm dbm = oracle::random_dbm({5, 4, 3}, 0.7, rng);
  BinaryDataset sd = samples(dbm, 1000, 30, clamp, rng);
  REQUIRE(sd.values.col(1).isOnes());
  REQUIRE(sd.values.col(4).isZero());
}

TEST_CASE("clamp validation rejects duplicates and bad indices") {
  Rng rng(4);
  Rbm m = Rbm::zeros(3, 2);
  Clamp dup;
  dup.indices = {0, 0};
  dup.values = Vector(2);
  dup.values << 1.0, 1.0;
  REQUIRE_THROWS_AS(samples(m, 5, 5, dup, rng), std::invalid_argument);

  Clamp range;
  range.indices = {3};
  range.values = Vector(1);
  range.values << 1.0;
  REQUIRE_THROWS_AS(samples(m, 5, 5, range, rng), std::invalid_argument);

  Clamp nonbinary;
  nonbinary.indices = {0};
  nonbinary.values = Vector(1);
  nonbinary.values << 0.5;
  REQUIRE_THROWS_AS(samples(m, 5, 5, nonbinary, rng), std::invalid_argument);
}

TEST_CASE("long RBM chains converge to the Boltzmann distribution") {
  Rng rng(5);
  Rbm m = oracle::random_rbm(4, 3, 0.5, rng);
  const std::vector<double> target = oracle::rbm_joint_distribution(m);

  Particles p = init_particles(m, 1, rng);
  std::vector<double> counts(target.size(), 0.0);
  const int steps = 100000;
  for (int t = 0; t < steps; ++t) {
    gibbs_transition(m, p, rng);
    std::uint64_t code = 0;
    for (Index i = 0; i < 4; ++i) {
      code |= static_cast<std::uint64_t>(p.states[0](0, i)) << i;
    }
    for (Index j = 0; j < 3; ++j) {
      code |= static_cast<std::uint64_t>(p.states[1](0, j)) << (4 + j);
    }
    counts[code] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t s = 0; s < target.size(); ++s) {
    tv += std::abs(counts[s] / steps - target[s]);
  }
  tv /= 2.0;
  REQUIRE(tv < 0.05);
}

TEST_CASE("clamped chains converge to the conditional distribution") {
  Rng rng(9);
  const Rbm m = oracle::random_rbm(4, 3, 0.5, rng);
  Clamp clamp;
  clamp.indices = {0};
  clamp.values = Vector(1);
  clamp.values << 1.0;

  // Enumerated conditional p(v, h | v_0 = 1).
  std::vector<double> target = oracle::rbm_joint_distribution(m);
  double mass = 0.0;
  for (std::size_t code = 0; code < target.size(); ++code) {
    if ((code & 1u) == 0) {
      target[code] = 0.0;
    } else {
      mass += target[code];
    }
  }
  for (double& p : target) {
    p /= mass;
  }

  Particles p = init_particles(m, 1, rng);
  clamp.apply(p.states[0]);
  std::vector<double> counts(target.size(), 0.0);
  const int steps = 100000;
  for (int t = 0; t < steps; ++t) {
    gibbs_transition(m, p, rng, 1.0, &clamp);
    std::uint64_t code = 0;
    for (Index i = 0; i < 4; ++i) {
      code |= static_cast<std::uint64_t>(p.states[0](0, i)) << i;
    }
    for (Index j = 0; j < 3; ++j) {
      code |= static_cast<std::uint64_t>(p.states[1](0, j)) << (4 + j);
    }
    counts[code] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t s = 0; s < target.size(); ++s) {
    tv += std::abs(counts[s] / steps - target[s]);
  }
  tv /= 2.0;
  REQUIRE(tv < 0.05);
}

TEST_CASE("same seed gives bit-identical samples") {
  Rng a(99), b(99);
  Rbm m = oracle::random_rbm(5, 4, 0.6, a);
  oracle::random_rbm(5, 4, 0.6, b);
  BinaryDataset s1 = samples(m, 50, 20, std::nullopt, a);
  BinaryDataset s2 = samples(m, 50, 20, std::nullopt, b);
  REQUIRE(s1.values == s2.values);

  Rng c(100);
  oracle::random_rbm(5, 4, 0.6, c);
  BinaryDataset s3 = samples(m, 50, 20, std::nullopt, c);
  REQUIRE(s1.values != s3.values);
}
